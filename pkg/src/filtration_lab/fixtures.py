"""Builders for the shipped scenario files.

Run ``python3 -m filtration_lab.fixtures [DIR]`` to rewrite them; the tests
check that the files on disk match these builders and the generator.
"""

from __future__ import annotations

import itertools
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .scenario import dumps_scenario, generate

GOLDEN = {
    "generated_seed0_d2_steps2.json": dict(seed=0, d=2, steps=2),
    "generated_seed0_d3_steps1.json": dict(seed=0, d=3, steps=1),
    "generated_seed0_default_staggered.json": dict(seed=0, d=1, steps=1, default=True, staggered=True),
    "generated_seed0_default_steps2.json": dict(seed=0, d=1, steps=2, default=True, drift_scale="1/2"),
}


def _coin_walk(labels, positions, up="u"):
    """Paths of the ±1 walk driven by the characters at ``positions``."""
    paths = {}
    for o in labels:
        row, cur = [0], 0
        for p in positions:
            cur += 1 if o[p] == up else -1
            row.append(cur)
        paths[o] = row
    return paths


def coin() -> dict:
    return {
        "schema_version": 1,
        "name": "fair-coin",
        "outcomes": ["u", "d"],
        "weights": {"u": "1/2", "d": "1/2"},
        "horizon": 1,
        "filtrations": {"F": {"product": [[0]]}},
        "processes": {"X": {"filtration": "F", "paths": {"u": [0, 1], "d": [0, -1]}}},
        "market": {"filtration": "F", "processes": ["X"]},
        "tasks": ["prp", "minimal_measure", {"task": "multiplicity", "filtration": "F"}],
    }


def product_coins(p_f: str = "1/2", name: str = "product-coins") -> dict:
    """Four coins a1 b1 a2 b2; F sees the a-coins, H the b-coins."""
    labels = ["".join(c) for c in itertools.product("ud", repeat=4)]
    pf = Fraction(p_f)

    def w(o):
        out = 1
        for k, ch in enumerate(o):
            p = pf if k in (0, 2) else Fraction(1, 2)
            out *= p if ch == "u" else 1 - p
        return f"{out.numerator}/{out.denominator}"

    return {
        "schema_version": 1,
        "name": name,
        "outcomes": labels,
        "weights": {o: w(o) for o in labels},
        "horizon": 2,
        "filtrations": {"F": {"product": [[0], [2]]}, "H": {"product": [[1], [3]]}, "G": {"join": ["F", "H"]}},
        "processes": {
            "X": {"filtration": "F", "paths": _coin_walk(labels, [0, 2])},
            "Y": {"filtration": "H", "paths": _coin_walk(labels, [1, 3])},
        },
        "enlargement": {"filtrations": ["F", "H"], "drivers": ["X", "Y"]},
        "tasks": ["theorem34", "theorem42", {"task": "multiplicity", "filtration": "G"}],
    }


def biased_coin() -> dict:
    return {
        "schema_version": 1,
        "name": "biased-coin",
        "outcomes": ["u", "d"],
        "weights": {"u": "3/5", "d": "2/5"},
        "horizon": 1,
        "filtrations": {"F": {"product": [[0]]}},
        "processes": {"X": {"filtration": "F", "paths": {"u": [0, 1], "d": [0, -1]}}},
        "market": {"filtration": "F", "processes": ["X"]},
        "tasks": ["minimal_measure", "prp"],
    }


def trinomial() -> dict:
    return {
        "schema_version": 1,
        "name": "trinomial-negative-density",
        "outcomes": ["a", "b", "c"],
        "weights": {"a": "1/4", "b": "1/2", "c": "1/4"},
        "horizon": 1,
        "filtrations": {"F": {"product": [[0]]}},
        "processes": {"X": {"filtration": "F", "paths": {"a": [0, 4], "b": [0, 1], "c": [0, -1]}}},
        "market": {"filtration": "F", "processes": ["X"]},
        "tasks": ["minimal_measure"],
    }


def deterministic_drift() -> dict:
    return {
        "schema_version": 1,
        "name": "drift-without-noise",
        "outcomes": ["u", "d"],
        "weights": {"u": "1/2", "d": "1/2"},
        "horizon": 1,
        "filtrations": {"F": {"product": [[0]]}},
        "processes": {"X": {"filtration": "F", "paths": {"u": [0, 1], "d": [0, 1]}}},
        "market": {"filtration": "F", "processes": ["X"]},
        "tasks": ["minimal_measure"],
    }


def coins(d: int) -> dict:
    labels = ["".join(c) for c in itertools.product("ud", repeat=d)]
    names = [f"F{i + 1}" for i in range(d)]
    return {
        "schema_version": 1,
        "name": f"coins-{d}",
        "outcomes": labels,
        "horizon": 1,
        "filtrations": {**{n: {"product": [[i]]} for i, n in enumerate(names)}, "G": {"join": names}},
        "processes": {f"X{i + 1}": {"filtration": names[i], "paths": _coin_walk(labels, [i])} for i in range(d)},
        "enlargement": {"filtrations": names, "drivers": [f"X{i + 1}" for i in range(d)]},
        "tasks": ["theorem42", "multiplicity"],
    }


def correlated_coins() -> dict:
    labels = ["uu", "ud", "du", "dd"]
    return {
        "schema_version": 1,
        "name": "correlated-coins",
        "outcomes": labels,
        "weights": {"uu": "3/10", "ud": "1/5", "du": "1/5", "dd": "3/10"},
        "horizon": 1,
        "filtrations": {"F": {"product": [[0]]}, "H": {"product": [[1]]}},
        "processes": {
            "X": {"filtration": "F", "paths": _coin_walk(labels, [0])},
            "Y": {"filtration": "H", "paths": _coin_walk(labels, [1])},
        },
        "enlargement": {"filtrations": ["F", "H"], "drivers": ["X", "Y"]},
        "tasks": ["theorem34"],
    }


def _default_market(horizon: int, move_paths: dict) -> dict:
    blocks = [[["u", "d"]], [["u"], ["d"]]] + [[["u"], ["d"]]] * (horizon - 1)
    return {
        "outcomes": ["u", "d"],
        "weights": {"u": "1/2", "d": "1/2"},
        "horizon": horizon,
        "filtrations": {"F": {"blocks": blocks}},
        "processes": {"X": {"filtration": "F", "paths": move_paths}},
        "market": {"filtration": "F", "processes": ["X"]},
    }


def staggered_default() -> dict:
    """Market moves at t=1, default possible only at t=2."""
    return {
        "schema_version": 1,
        "name": "staggered-default",
        **_default_market(2, {"u": [0, 1, 1], "d": [0, -1, -1]}),
        "default": {
            "market_filtration": "F",
            "market_processes": ["X"],
            "theta": [2, "inf"],
            "joint": {"u": ["1/4", "1/4"], "d": ["1/8", "3/8"]},
        },
        "tasks": ["kusuoka"],
    }


def simultaneous_default() -> dict:
    """Market move and default share the date t=1."""
    return {
        "schema_version": 1,
        "name": "simultaneous-default",
        **_default_market(1, {"u": [0, 1], "d": [0, -1]}),
        "default": {
            "market_filtration": "F",
            "market_processes": ["X"],
            "theta": [1, "inf"],
            "joint": {"u": ["1/4", "1/4"], "d": ["1/8", "3/8"]},
        },
        "tasks": ["kusuoka"],
    }


def no_default() -> dict:
    return {
        "schema_version": 1,
        "name": "no-default",
        **_default_market(1, {"u": [0, 1], "d": [0, -1]}),
        "default": {
            "market_filtration": "F",
            "market_processes": ["X"],
            "theta": ["inf"],
            "joint": {"u": ["1/2"], "d": ["1/2"]},
        },
        "tasks": ["kusuoka"],
    }


def support_broken_default() -> dict:
    """The down branch defaults for sure: the density hypothesis fails."""
    doc = staggered_default()
    doc["name"] = "support-broken-default"
    doc["default"]["joint"] = {"u": ["1/4", "1/4"], "d": ["1/2", 0]}
    return doc


def certain_default() -> dict:
    """τ uniform on {1, 2}: the hazard reaches 1 at time 2."""
    return {
        "schema_version": 1,
        "name": "certain-default",
        **_default_market(2, {"u": [0, 1, 1], "d": [0, -1, -1]}),
        "default": {
            "market_filtration": "F",
            "market_processes": ["X"],
            "theta": [1, 2],
            "joint": {"u": ["1/4", "1/4"], "d": ["1/4", "1/4"]},
        },
        "tasks": ["kusuoka"],
    }


def immersion_counterexample() -> dict:
    """A default at t=1 leaks the second market move."""
    labels = ["uu", "ud", "du", "dd"]
    return {
        "schema_version": 1,
        "name": "immersion-counterexample",
        "outcomes": labels,
        "horizon": 2,
        "filtrations": {"F": {"product": [[0], [1]]}},
        "processes": {"X": {"filtration": "F", "paths": _coin_walk(labels, [0, 1])}},
        "market": {"filtration": "F", "processes": ["X"]},
        "default": {
            "market_filtration": "F",
            "market_processes": ["X"],
            "theta": [1, "inf"],
            "joint": {"uu": ["1/8", "1/8"], "ud": ["1/16", "3/16"], "du": ["1/8", "1/8"], "dd": ["1/16", "3/16"]},
        },
        "tasks": ["kusuoka"],
    }


def non_refining() -> dict:
    labels = ["uu", "ud", "du", "dd"]
    return {
        "schema_version": 1,
        "name": "non-refining-filtration",
        "outcomes": labels,
        "horizon": 2,
        "filtrations": {"F": {"blocks": [[labels], [["uu", "ud"], ["du", "dd"]], [["uu", "du"], ["ud", "dd"]]]}},
        "processes": {},
        "tasks": [],
    }


def unnormalized_weights() -> dict:
    doc = coin()
    doc["name"] = "unnormalized-weights"
    doc["weights"] = {"u": 0.5, "d": 0.499}
    return doc


FIXTURES = {
    "coin.json": coin,
    "product_coins.json": product_coins,
    "product_coins_drifted.json": lambda: product_coins("3/5", "product-coins-drifted"),
    "biased_coin.json": biased_coin,
    "trinomial.json": trinomial,
    "drift_without_noise.json": deterministic_drift,
    "coins3.json": lambda: coins(3),
    "coins4.json": lambda: coins(4),
    "correlated_coins.json": correlated_coins,
    "staggered_default.json": staggered_default,
    "simultaneous_default.json": simultaneous_default,
    "no_default.json": no_default,
    "support_broken_default.json": support_broken_default,
    "certain_default.json": certain_default,
    "immersion_counterexample.json": immersion_counterexample,
    "non_refining.json": non_refining,
    "unnormalized_weights.json": unnormalized_weights,
}

MALFORMED = '{"schema_version": 1, "outcomes": ["u", "d"],\n "horizon": 1,\n "weights": [1/2, 1/2]}\n'

# expected CLI exit code per shipped file
EXPECTED_EXIT = {
    "coin.json": 0,
    "product_coins.json": 0,
    "product_coins_drifted.json": 0,
    "biased_coin.json": 0,
    "trinomial.json": 1,
    "drift_without_noise.json": 1,
    "coins3.json": 0,
    "coins4.json": 0,
    "correlated_coins.json": 1,
    "staggered_default.json": 0,
    "simultaneous_default.json": 0,
    "no_default.json": 0,
    "support_broken_default.json": 1,
    "certain_default.json": 1,
    "immersion_counterexample.json": 1,
    "non_refining.json": 2,
    "unnormalized_weights.json": 2,
    "malformed.json": 2,
    **{name: 0 for name in GOLDEN},
}


def scenario_dir() -> Path:
    return Path(str(resources.files("filtration_lab") / "scenarios"))


def render_all() -> dict[str, str]:
    out = {name: dumps_scenario(build()) for name, build in FIXTURES.items()}
    out["malformed.json"] = MALFORMED
    for name, params in GOLDEN.items():
        out[name] = dumps_scenario(generate(**params))
    return out


def write_all(directory=None) -> list[Path]:
    directory = Path(directory) if directory else scenario_dir()
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in render_all().items():
        p = directory / name
        p.write_text(text, encoding="utf-8")
        paths.append(p)
    return paths


if __name__ == "__main__":
    for p in write_all(sys.argv[1] if len(sys.argv) > 1 else None):
        print(p)
