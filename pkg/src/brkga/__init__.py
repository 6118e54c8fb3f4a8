"""Random-key genetic algorithms (RKGA, BRKGA, BRKGA-MP) with pluggable decoders."""

from .advanced import (hamming_distance, implicit_path_relinking, kendall_tau_distance,
                       migrate, multi_parent_crossover, shake)
from .core import Chromosome, Origin, Population, RngStream, diversity, new_random_chromosome, partition
from .decoders import (Decoder, FunctionDecoder, KnapsackDecoder, KnapsackInstance, MixedDecoder,
                       TspDecoder, TspInstance, encode_selection, encode_tour, keys_to_classes,
                       keys_to_permutation, mixed_decode)
from .engine import Engine, StopCriteria, crossover, evolve_generation, run
from .errors import (BrkgaError, ConfigError, DecodeError, DimensionError, EncodeError,
                     InvalidParameterError, LayoutError, NotEvaluatedError, ParseError)
from .params import (BrkgaParams, IprConfig, IslandConfig, MultiParentConfig, RandomControlBounds,
                     ShakeConfig, default_params, sample_online_params, validate)

__version__ = "0.1.0"
