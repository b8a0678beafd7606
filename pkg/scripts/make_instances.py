"""Regenerate the instance files bundled in ``src/conicdist/instances``."""

from pathlib import Path

import numpy as np

from conicdist.generators import random_exact_instance
from conicdist.instance_io import InstanceFile, dumps

OUT = Path(__file__).resolve().parents[1] / "src" / "conicdist" / "instances"

DIAG31 = [[3.0, 0.0], [0.0, 1.0]]
EYE2 = [[1.0, 0.0], [0.0, 1.0]]


def block(P, Q, norm_U, norm_V):
    return {"P": P, "Q": Q, "norm_U": norm_U, "norm_V": norm_V}


HAND_WRITTEN = {
    "identity_full": {
        "A": EYE2, "cone": {"type": "full"}, "blocks": [block(EYE2, EYE2, "L2", "L2")],
    },
    "identity_nonneg": {
        "A": EYE2, "cone": {"type": "nonneg"}, "blocks": [block(EYE2, EYE2, "L2", "L2")],
    },
    "eckart_young_diag31": {
        "norms": {"X": "L2", "Y": "L2"},
        "A": DIAG31, "cone": {"type": "full"}, "blocks": [block(EYE2, EYE2, "L2", "L2")],
    },
    "masked_entry_diag31": {
        "A": DIAG31, "cone": {"type": "full"}, "blocks": [block([[1.0], [0.0]], [[1.0, 0.0]], "LINF", "LINF")],
    },
    "all_p_zero": {
        "A": DIAG31, "cone": {"type": "full"}, "blocks": [block([[0.0], [0.0]], [[1.0, 0.0]], "L1", "L1")],
    },
    "nonsurjective": {
        "A": [[1.0, 0.0], [0.0, 0.0]], "cone": {"type": "full"}, "blocks": [block(EYE2, EYE2, "L1", "LINF")],
    },
    "scalar_alternative": {
        "A": [[1.0]], "cone": {"type": "full"}, "blocks": [block([[1.0]], [[1.0]], "L1", "L1")],
    },
    "halfline_alternative": {
        "A": [[1.0]], "cone": {"type": "nonneg"}, "blocks": [block([[1.0]], [[1.0]], "L1", "L1")],
    },
}

# an input error for the schema checks: A[1] is one entry short
MALFORMED = '{\n  "x_dim": 3,\n  "y_dim": 2,\n  "A": [[1, 0, 0], [0, 1]],\n  "cone": {"type": "full"},\n  "blocks": []\n}\n'


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, data in HAND_WRITTEN.items():
        inst = InstanceFile.from_dict(dict(data, name=name))
        (OUT / f"{name}.json").write_text(dumps(inst.to_dict()) + "\n")
    for seed in (7,):
        # first draw of the seeded stream with at least 2 x 2 data
        rng = np.random.default_rng(seed)
        r = random_exact_instance(rng)
        while min(r.F.x_dim, r.F.y_dim) < 2:
            r = random_exact_instance(rng)
        inst = InstanceFile.from_problem(r.F, r.blocks, f"random_exact_seed{seed}")
        (OUT / f"{inst.name}.json").write_text(dumps(inst.to_dict()) + "\n")
    (OUT / "malformed_row.json").write_text(MALFORMED)
    print("wrote", sorted(p.name for p in OUT.glob("*.json")))


if __name__ == "__main__":
    main()
