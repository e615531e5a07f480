"""Regenerate the fixtures shipped in src/hdual/data (deterministic seeds)."""
import json
from pathlib import Path

import numpy as np

from hdual.testbed import composite_to_fixture, random_box_ls, random_lasso, random_quadratic

DATA = Path(__file__).resolve().parents[1] / "src" / "hdual" / "data"


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    q = random_quadratic(np.random.default_rng(0), d=10)
    fixtures = {
        "quadratic_d10": {"type": "quadratic", "A": q.A.tolist(), "b": q.b.tolist()},
        "lasso_d50": composite_to_fixture(random_lasso(np.random.default_rng(0))),
        "box_d50": composite_to_fixture(random_box_ls(np.random.default_rng(1))),
    }
    for name, obj in fixtures.items():
        (DATA / f"{name}.json").write_text(json.dumps(obj, sort_keys=True) + "\n")
        print(name)


if __name__ == "__main__":
    main()
