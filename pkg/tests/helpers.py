import numpy as np

from brkga import KnapsackInstance, Population


def toy_knapsack():
    return KnapsackInstance([3, 4, 5, 6], [4, 5, 6, 9], 10)


def evaluated_population(decoder, size, seed, elite_count):
    keys = np.random.default_rng(seed).random((size, decoder.n))
    pop = Population(keys, decoder.fitness_batch(keys), None, elite_count)
    return pop.sorted()


# acceptance verdict lines, echoed again in the terminal summary
ACCEPTANCE_LINES = []


def verdict(number, title, ok, detail=""):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title}"
    if detail:
        line += f" ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok
