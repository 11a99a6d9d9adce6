"""Shared builders and hypothesis strategies for the test-suite."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
from hypothesis import strategies as st

from filtration_lab import AdaptedProcess, FiniteProbSpace, Filtration, Partition, PredictableProcess
from filtration_lab.fixtures import scenario_dir
from filtration_lab.scenario import load_scenario

F = Fraction


def shipped(name: str):
    return load_scenario(scenario_dir() / name)


def one_step(outcomes, weights):
    sp = FiniteProbSpace(outcomes, weights)
    f = Filtration(sp, [Partition.trivial(sp), Partition.discrete(sp)])
    return sp, f


def coin_product(d: int, p=F(1, 2)):
    labels = ["".join(c) for c in itertools.product("ud", repeat=d)]
    w = [np.prod([p if ch == "u" else 1 - p for ch in o]) for o in labels]
    sp = FiniteProbSpace(labels, [F(x) for x in w])
    fs = [Filtration(sp, [Partition.trivial(sp), Partition(sp, [o[i] for o in labels])]) for i in range(d)]
    xs = [AdaptedProcess(fs[i], [[0] * len(labels), [1 if o[i] == "u" else -1 for o in labels]], name=f"X{i + 1}") for i in range(d)]
    return sp, fs, xs


@st.composite
def filtered_spaces(draw, max_n=8, max_T=3, exact=True):
    """A random space with a random refining filtration (trivial at 0, discrete not required)."""
    n = draw(st.integers(2, max_n))
    T = draw(st.integers(1, max_T))
    raw = draw(st.lists(st.integers(1, 9), min_size=n, max_size=n))
    s = sum(raw)
    weights = [F(r, s) for r in raw] if exact else [r / s for r in raw]
    sp = FiniteProbSpace([f"w{i}" for i in range(n)], weights, exact=exact)
    labels = [(0,)] * n
    parts = [Partition.trivial(sp)]
    for _ in range(T):
        bits = draw(st.lists(st.integers(0, 2), min_size=n, max_size=n))
        labels = [lab + (b,) for lab, b in zip(labels, bits)]
        parts.append(Partition(sp, [hash(lab) for lab in labels]))
    return sp, Filtration(sp, parts)


def _block_values(draw, f: Filtration, t: int, dim: int, lo=-5, hi=5, exact=True):
    part = f[t]
    vals = draw(st.lists(st.lists(st.integers(lo, hi), min_size=dim, max_size=dim), min_size=part.nblocks, max_size=part.nblocks))
    arr = np.array([vals[b] for b in part.labels], dtype=object)
    return arr if exact else arr.astype(float)


@st.composite
def adapted(draw, f: Filtration, dim: int = 1, name: str = "X"):
    exact = f.space.exact
    rows = [_block_values(draw, f, t, dim, exact=exact) for t in range(f.horizon + 1)]
    return AdaptedProcess(f, np.stack(rows), name=name)


@st.composite
def predictable(draw, f: Filtration, dim: int = 1):
    exact = f.space.exact
    rows = [np.zeros((f.space.n, dim), dtype=object if exact else float)]
    rows += [_block_values(draw, f, t - 1, dim, exact=exact) for t in range(1, f.horizon + 1)]
    arr = np.stack(rows)
    if exact:
        arr = np.vectorize(F, otypes=[object])(arr)
    return PredictableProcess(f, arr, name="xi")


@st.composite
def space_and_process(draw, dim=1, exact=True, max_n=8, max_T=3):
    sp, f = draw(filtered_spaces(max_n=max_n, max_T=max_T, exact=exact))
    return sp, f, draw(adapted(f, dim))
