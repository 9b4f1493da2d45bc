"""Regenerate frozen expected values with the independent oracle. Run from
the repo root: python tests/tools/freeze_goldens.py"""

import json
import sys
import tempfile
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
from oracles import naive_measure, ring_polygon_perimeter_mm  # noqa: E402

from anthrofit import fixtures  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "data" / "golden_measurements.json"
PROBE_BETA = [0.4, -0.25, 0.6, -0.5]

with tempfile.TemporaryDirectory() as tmp:
    human = Path(tmp) / "human.bmf"
    fixtures.write_toy_asset("human", human)
    cylinder = Path(tmp) / "cylinder16.bmf"
    fixtures.write_toy_asset("cylinder", cylinder)

    golden = {
        "human_beta_zero": naive_measure(human, np.zeros(4)),
        "human_beta_probe": {"beta": PROBE_BETA,
                             "values": naive_measure(human, np.array(PROBE_BETA))},
        "cylinder_beta_zero": naive_measure(cylinder, np.zeros(2)),
        "cylinder_waist_closed_form_mm": 16 * 2 * 0.1 * float(np.sin(np.pi / 16)) * 1000.0,
        "human_ring_closed_forms_mm": {
            "waist_circ": ring_polygon_perimeter_mm(0.135, 0.095, 12),
            "chest_circ": ring_polygon_perimeter_mm(0.150, 0.105, 12),
            "hip_circ": ring_polygon_perimeter_mm(0.155, 0.105, 12),
            "head_circ": ring_polygon_perimeter_mm(0.082, 0.082, 12),
            "thigh_circ_l": ring_polygon_perimeter_mm(0.080, 0.080, 12),
            "thigh_circ_r": ring_polygon_perimeter_mm(0.080, 0.080, 12),
            "calf_circ_l": ring_polygon_perimeter_mm(0.065, 0.065, 12),
            "calf_circ_r": ring_polygon_perimeter_mm(0.065, 0.065, 12),
        },
    }

OUT.write_text(json.dumps(golden, indent=2, sort_keys=True) + "\n")
print("wrote", OUT)
