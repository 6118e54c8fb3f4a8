"""Algorithm parameters, their validation, the config file format and random online control."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError, ParseError

RKGA = "RKGA"
BRKGA = "BRKGA"
BRKGA_MP = "BRKGA-MP"
VARIANTS = (RKGA, BRKGA, BRKGA_MP)

BIAS_KINDS = ("logInverse", "linear", "quadratic", "cubic", "exponential", "constant")
SELECTIONS = ("bestSolution", "randomElite")


@dataclass(frozen=True)
class IslandConfig:
    p: int = 1
    g: int = 100
    i: int = 1


@dataclass(frozen=True)
class ShakeConfig:
    iters: int = 50
    lower: float = 0.1
    upper: float = 0.5


@dataclass(frozen=True)
class MultiParentConfig:
    total: int = 3
    elite: int = 2
    bias: str = "logInverse"


@dataclass(frozen=True)
class IprConfig:
    sel: str = "bestSolution"
    cp: float = 0.5
    md: float = 0.15
    bs: int = 1
    ps: float = 1.0
    iters: int = 100


@dataclass(frozen=True)
class BrkgaParams:
    n: int
    pop_size: int = 100
    elite_pct: float = 0.2
    mutant_pct: float = 0.15
    rho: float = 0.7
    variant: str = BRKGA
    islands: IslandConfig = field(default_factory=IslandConfig)
    restart_iters: int = 300
    shake: ShakeConfig | None = None
    multi_parent: MultiParentConfig | None = None
    ipr: IprConfig | None = None

    @property
    def elite_count(self) -> int:
        return population_counts(self.pop_size, self.elite_pct, self.mutant_pct)[0]

    @property
    def mutant_count(self) -> int:
        return population_counts(self.pop_size, self.elite_pct, self.mutant_pct)[1]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def population_counts(pop_size: int, elite_pct: float, mutant_pct: float) -> tuple[int, int]:
    """Integer elite and mutant counts for a population size.

    Percentages are rounded to the nearest integer, then clamped so that
    there is at least one elite, one mutant and one offspring, and the elite
    stays strictly below half of the population.
    """
    elite = max(1, _round_half_up(elite_pct * pop_size))
    elite = min(elite, (pop_size - 1) // 2)
    mutant = max(1, _round_half_up(mutant_pct * pop_size))
    mutant = min(mutant, pop_size - 1 - elite)
    return elite, mutant


@dataclass(frozen=True)
class Violation:
    level: str  # "error" or "warning"
    field: str
    message: str

    def __str__(self):
        return f"{self.level}: {self.field}: {self.message}"


def recommended_pop_range(n: int) -> tuple[int, int]:
    cap = 10 * n
    return min(100, cap), min(500, cap)


def validate(params: BrkgaParams) -> list[Violation]:
    """Hard errors make evolution impossible; warnings flag values outside the
    literature's recommended ranges."""
    out: list[Violation] = []

    def err(name, msg):
        out.append(Violation("error", name, msg))

    def warn(name, msg):
        out.append(Violation("warning", name, msg))

    def recommend(name, value, lo, hi):
        if not lo <= value <= hi:
            warn(name, f"{value} outside recommended range [{lo}, {hi}]")

    P = params.pop_size
    if params.n < 1:
        err("n", "chromosome length must be at least 1")
    if P < 3:
        err("pop_size", f"{P} < 3")
    if not 0 < params.elite_pct < 0.5:
        err("elite_pct", f"{params.elite_pct} not in (0, 0.5)")
    if not 0 < params.mutant_pct < 0.5:
        err("mutant_pct", f"{params.mutant_pct} not in (0, 0.5)")
    if P >= 3 and math.floor(params.elite_pct * P) + math.floor(params.mutant_pct * P) >= P:
        err("pop_size", "elite and mutant partitions leave no room for offspring")
    if params.variant not in VARIANTS:
        err("variant", f"unknown variant {params.variant!r}")
    elif params.variant == BRKGA and not 0.5 < params.rho <= 1:
        err("rho", f"BRKGA requires 0.5 < rho <= 1, got {params.rho}")
    elif params.variant == RKGA and not 0 < params.rho < 1:
        err("rho", f"RKGA requires 0 < rho < 1, got {params.rho}")
    elif params.variant == BRKGA_MP and params.multi_parent is None:
        err("variant", "BRKGA-MP needs mp_total, mp_elite and bias")

    if P >= 3 and params.n >= 1:
        lo, hi = recommended_pop_range(params.n)
        recommend("pop_size", P, lo, hi)
    recommend("elite_pct", params.elite_pct, 0.1, 0.5)
    recommend("mutant_pct", params.mutant_pct, 0.1, 0.5)
    if params.variant != BRKGA_MP:
        recommend("rho", params.rho, 0.5, 1.0)

    elite, _ = population_counts(P, params.elite_pct, params.mutant_pct) if P >= 3 else (0, 0)

    isl = params.islands
    if isl.p < 1:
        err("p", f"{isl.p} < 1")
    if isl.g < 1:
        err("g", f"{isl.g} < 1")
    if isl.i < 1:
        err("i", f"{isl.i} < 1")
    elif isl.p > 1 and isl.i > elite:
        err("i", f"{isl.i} migrants exceed the elite count {elite}")
    recommend("p", isl.p, 1, 3)
    if isl.p > 1:
        recommend("g", isl.g, 50, 500)
        recommend("i", isl.i, 1, 2)

    if params.restart_iters < 1:
        err("restart_iters", f"{params.restart_iters} < 1")
    recommend("restart_iters", params.restart_iters, 200, 500)

    sk = params.shake
    if sk is not None:
        if sk.iters < 1:
            err("shake_iters", f"{sk.iters} < 1")
        if not 0 <= sk.lower <= sk.upper <= 1:
            err("shake_lower", "need 0 <= shake_lower <= shake_upper <= 1")
        recommend("shake_iters", sk.iters, 20, 100)
        recommend("shake_lower", sk.lower, 0.1, 0.5)
        recommend("shake_upper", sk.upper, 0.5, 0.9)

    mp = params.multi_parent
    if mp is not None:
        if mp.bias not in BIAS_KINDS:
            err("bias", f"unknown bias {mp.bias!r}")
        if not 1 <= mp.elite < mp.total:
            err("mp_elite", f"need 1 <= mp_elite < mp_total, got {mp.elite}/{mp.total}")
        elif P >= 3:
            if mp.elite > elite:
                err("mp_elite", f"{mp.elite} elite parents but only {elite} elites")
            if mp.total - mp.elite > P - elite:
                err("mp_total", "not enough non-elite members for the parent count")
        recommend("mp_total", mp.total, 3, 10)
        recommend("mp_elite", mp.elite, 1, 7)

    ipr = params.ipr
    if ipr is not None:
        if ipr.sel not in SELECTIONS:
            err("ipr_sel", f"unknown selection {ipr.sel!r}")
        if not 0 < ipr.cp <= 1:
            err("ipr_cp", f"{ipr.cp} not in (0, 1]")
        if not 0 <= ipr.md <= 1:
            err("ipr_md", f"{ipr.md} not in [0, 1]")
        if ipr.bs < 1:
            err("ipr_bs", f"{ipr.bs} < 1")
        if not 0 < ipr.ps <= 1:
            err("ipr_ps", f"{ipr.ps} not in (0, 1]")
        if ipr.iters < 1:
            err("ipr_iters", f"{ipr.iters} < 1")
        recommend("ipr_md", ipr.md, 0.0, 0.3)
        recommend("ipr_bs", ipr.bs, 1, 1)
        recommend("ipr_ps", ipr.ps, 0.01, 1.0)
        recommend("ipr_iters", ipr.iters, 50, 500)
    return out


def errors_of(violations) -> list[Violation]:
    return [v for v in violations if v.level == "error"]


def check(params: BrkgaParams) -> list[Violation]:
    """Validate and raise :class:`ConfigError` on hard errors; return warnings."""
    found = validate(params)
    hard = errors_of(found)
    if hard:
        raise ConfigError("invalid parameters: " + "; ".join(map(str, hard)), hard)
    return found


def default_params(n: int) -> BrkgaParams:
    if n < 1:
        raise ValueError("n must be at least 1")
    return BrkgaParams(n=n, pop_size=max(3, min(100, 10 * n)))


# -- config file ---------------------------------------------------------------

# key -> (block, attribute, type)
CONFIG_KEYS = {
    "variant": (None, "variant", str),
    "pop_size": (None, "pop_size", int),
    "elite_pct": (None, "elite_pct", float),
    "mutant_pct": (None, "mutant_pct", float),
    "rho": (None, "rho", float),
    "restart_iters": (None, "restart_iters", int),
    "p": ("islands", "p", int),
    "g": ("islands", "g", int),
    "i": ("islands", "i", int),
    "shake_iters": ("shake", "iters", int),
    "shake_lower": ("shake", "lower", float),
    "shake_upper": ("shake", "upper", float),
    "mp_total": ("multi_parent", "total", int),
    "mp_elite": ("multi_parent", "elite", int),
    "bias": ("multi_parent", "bias", str),
    "ipr_sel": ("ipr", "sel", str),
    "ipr_cp": ("ipr", "cp", float),
    "ipr_md": ("ipr", "md", float),
    "ipr_bs": ("ipr", "bs", int),
    "ipr_ps": ("ipr", "ps", float),
    "ipr_iters": ("ipr", "iters", int),
}

_BLOCKS = {"islands": IslandConfig, "shake": ShakeConfig,
           "multi_parent": MultiParentConfig, "ipr": IprConfig}


def _convert(raw: str, typ, key, path, lineno):
    try:
        if typ is int:
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        return typ(raw)
    except ValueError:
        raise ParseError(f"bad value {raw!r} for {key}", path, lineno) from None


def parse_config_text(text: str, n: int, path=None, base: BrkgaParams | None = None) -> BrkgaParams:
    """Build parameters from ``key = value`` lines on top of ``base``.

    A block (shake, multi-parent, path-relinking) is enabled as soon as one
    of its keys appears; its other keys fall back to block defaults.
    """
    params = base if base is not None else default_params(n)
    top: dict = {}
    blocks: dict = {}
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", path, lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ParseError(f"unknown key {key!r}", path, lineno)
        if key in seen:
            raise ParseError(f"duplicate key {key!r}", path, lineno)
        seen.add(key)
        block, attr, typ = CONFIG_KEYS[key]
        value = _convert(raw, typ, key, path, lineno)
        if block is None:
            top[attr] = value
        else:
            blocks.setdefault(block, {})[attr] = value
    for block, values in blocks.items():
        current = getattr(params, block) or _BLOCKS[block]()
        top[block] = replace(current, **values)
    if "multi_parent" in blocks and "variant" not in top:
        top["variant"] = BRKGA_MP
    return replace(params, n=n, **top)


def load_config(path, n: int, base: BrkgaParams | None = None) -> BrkgaParams:
    path = Path(path)
    return parse_config_text(path.read_text(), n, path=str(path), base=base)


def format_config(params: BrkgaParams) -> str:
    lines = []
    for key, (block, attr, _) in CONFIG_KEYS.items():
        holder = params if block is None else getattr(params, block)
        if holder is None:
            continue
        lines.append(f"{key} = {getattr(holder, attr)}")
    return "\n".join(lines) + "\n"


# -- random online control -------------------------------------------------------

@dataclass(frozen=True)
class RandomControlBounds:
    pop_size: tuple[int, int]
    elite_pct: tuple[float, float]
    mutant_pct: tuple[float, float]
    rho: tuple[float, float]

    @classmethod
    def around(cls, params: BrkgaParams) -> RandomControlBounds:
        """Default bounds used by the ``control`` command."""
        lo = max(3, params.pop_size // 2)
        rho = (0.55, 0.95) if params.variant != RKGA else (0.05, 0.95)
        return cls((lo, params.pop_size), (0.10, 0.30), (0.10, 0.30), rho)


@dataclass(frozen=True)
class ParamOverlay:
    pop_size: int
    elite_pct: float
    mutant_pct: float
    rho: float

    def apply(self, params: BrkgaParams) -> BrkgaParams:
        return replace(params, pop_size=self.pop_size, elite_pct=self.elite_pct,
                       mutant_pct=self.mutant_pct, rho=self.rho)

    @classmethod
    def of(cls, params: BrkgaParams) -> ParamOverlay:
        return cls(params.pop_size, params.elite_pct, params.mutant_pct, params.rho)


def validate_bounds(bounds: RandomControlBounds, params: BrkgaParams) -> list[Violation]:
    """Errors if some draw inside ``bounds`` could yield an invalid parameter set."""
    out = []
    for f in fields(bounds):
        lo, hi = getattr(bounds, f.name)
        if lo > hi:
            out.append(Violation("error", f.name, f"lower bound {lo} above upper {hi}"))
    if out:
        return out
    corners = [ParamOverlay(P, e, m, r)
               for P in bounds.pop_size for e in bounds.elite_pct
               for m in bounds.mutant_pct for r in bounds.rho]
    for corner in corners:
        for v in errors_of(validate(corner.apply(params))):
            out.append(Violation("error", v.field, f"at bound corner {corner}: {v.message}"))
    # elite counts grow monotonically with P and elite_pct, so corners cover the range
    return sorted(set(out), key=lambda v: (v.field, v.message))


def sample_online_params(bounds: RandomControlBounds, rng) -> ParamOverlay:
    """One uniform draw of each controlled parameter within its bounds."""
    lo, hi = bounds.pop_size
    pop = int(rng.integers(lo, hi + 1))
    return ParamOverlay(
        pop_size=pop,
        elite_pct=float(rng.uniform(*bounds.elite_pct)),
        mutant_pct=float(rng.uniform(*bounds.mutant_pct)),
        rho=float(rng.uniform(*bounds.rho)),
    )
