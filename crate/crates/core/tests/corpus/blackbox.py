import math

from numpy import ndarray


def norm(v, n):
    total = 0.0
    for i in range(0, n):
        total += v[i] * v[i]
    return math.sqrt(total)


def tally(words: list, counts: list, n: int):
    seen = {}
    for i in range(0, n):
        w = words[i]
        seen[w] = seen.get(w, 0) + 1
    while len(seen) > 2:
        seen.popitem()
    counts[0] = len(seen)
