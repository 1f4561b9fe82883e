import numpy as np
import pytest

from carpet_energy import build_graph, face_codes
from carpet_energy.solve import capacity


@pytest.fixture(scope="session")
def graphs():
    """Touching graphs, built once per session."""
    cache = {}

    def get(n, flavor="touching"):
        key = (n, flavor)
        if key not in cache:
            cache[key] = build_graph(n, flavor)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def face_cap(graphs):
    """Memoized left-right face capacity (value, solution)."""
    cache = {}

    def get(p, n):
        if (p, n) not in cache:
            G = graphs(n)
            cache[(p, n)] = capacity(
                G, face_codes(n, "L"), face_codes(n, "R"), None, p
            )
        return cache[(p, n)]

    return get


def brute_force_adjacency(n):
    """Independent adjacency oracle: O(V^2) loop over admissible boxes."""
    boxes = {}
    for code in range(8**n):
        col = row = 0
        c = code
        digits = []
        for _ in range(n):
            digits.append(c % 8)
            c //= 8
        grid = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)]
        for d in reversed(digits):
            col = col * 3 + grid[d][0]
            row = row * 3 + grid[d][1]
        boxes[code] = (col, row)
    side, corner = set(), set()
    codes = sorted(boxes)
    for i in codes:
        for j in codes:
            if j <= i:
                continue
            dx = abs(boxes[i][0] - boxes[j][0])
            dy = abs(boxes[i][1] - boxes[j][1])
            if dx + dy == 1:
                side.add((i, j))
            elif dx == 1 and dy == 1:
                corner.add((i, j))
    return side, corner


@pytest.fixture(scope="session")
def adjacency_oracle():
    return brute_force_adjacency
