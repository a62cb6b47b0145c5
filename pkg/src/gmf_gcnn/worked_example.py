"""Reference first-iteration numbers for the 8-vertex GCNN worked example.

All values are 3-4 decimal prints. ``PRINT_TOL`` applies to quantities that
are upstream of (or unaffected by) the misprinted ``f(y_2)(1)``, and
``ERRATUM_TOL`` to everything downstream of it.
"""

import numpy as np

PRINT_TOL = 2e-3
ERRATUM_TOL = 5e-2

ORIGIN = 7
TARGET = np.array([1.0, 0.0])

INPUT = np.array([0.087, 0.030, -0.006, 0.039, -0.254, -0.426, 0.946, -0.145])
FEATURE1 = np.array([0, 0, 0, 0, -0.316, -0.408, 1, 0], dtype=float)

CONV_WEIGHTS = np.array([[-0.221, -0.741], [1.429, 0.323]])
BIASES = np.zeros(2)

FC_WEIGHTS = np.array(
    [
        [-0.045, 0.391, -0.289, 0.123, 0.309, 0.029, 0.121, -0.132,
         -0.389, 0.081, -0.055, -0.609, -0.183, -0.765, 0.277, 0.174],
        [-0.248, 0.023, -0.085, 0.543, 0.102, -0.548, -0.542, -0.360,
         0.706, 0.412, -0.590, -0.714, -0.445, 0.102, 0.245, -0.226],
    ]
)

# Schedule that reproduces the printed updates: FC step first, then the conv
# delta through the updated FC weights.
STEP_W = 0.15
STEP_B = 0.05
STEP_V = 0.15
UPDATE_ORDER = "fc-first"

Y1 = np.array([0.012, 0.037, -0.034, 0.121, -0.067, -0.152, -0.021, 0.053])
Y2 = np.array([0.111, 0.024, 0.007, -0.001, -0.309, -0.501, 1.270, -0.217])
RELU_Y1 = np.array([0.012, 0.037, 0, 0.121, 0, 0, 0, 0.053])
RELU_Y2 = np.array([0.011, 0.024, 0.007, 0, 0, 0, 1.270, 0])  # entry 1 misprinted
RELU_MASK = np.array([[1, 1, 0, 1, 0, 0, 0, 1], [1, 1, 1, 0, 0, 0, 1, 0]], dtype=float)
# Printed with a stray zero after the ninth entry; removed here.
FLATTENED = np.concatenate([RELU_Y1, RELU_Y2])
LOGITS = np.array([0.332, 0.440])
PROBABILITIES = np.array([0.4731, 0.5269])
DELTA_OUT = np.array([-0.5269, 0.5269])
GRAD_FC = np.array(
    [
        [-0.006, -0.019, 0, -0.064, 0, 0, 0, -0.028, -0.058, -0.013, -0.004, 0, 0, 0, -0.669, 0],
        [0.006, 0.019, 0, 0.064, 0, 0, 0, 0.028, 0.058, 0.013, 0.004, 0, 0, 0, 0.669, 0],
    ]
)
FC_UPDATED = np.array(
    [
        [-0.044, 0.394, -0.289, 0.132, 0.309, 0.029, 0.121, -0.128,
         -0.380, 0.082, -0.054, -0.609, -0.183, -0.765, 0.378, 0.174],
        [-0.249, 0.021, -0.085, 0.534, 0.102, -0.548, -0.542, -0.364,
         0.697, 0.410, -0.591, -0.714, -0.445, 0.102, 0.145, -0.226],
    ]
)
DELTA_CONV = np.array(
    [
        [-0.108, -0.197, 0, 0.211, 0, 0, 0, -0.125],
        [0.567, 0.173, -0.283, 0, 0, 0, -0.123, 0],
    ]
)
GRAD_CONV = np.array([[0.011, -0.017], [-0.060, -0.017]])
CONV_UPDATED = np.array([[-0.223, -0.739], [1.437, 0.325]])
BIAS_UPDATED = np.array([0.0109, -0.0167])

NEXT_INPUT = np.array([-0.412, 0.886, -0.338, -0.202, -0.204, 0.029, 0.035, -0.304])

# Pooling example: one-hot rows of the activation-and-pool survivor mask,
# computed from the printed f(y_1), f(y_2).
POOL_GROUPS = [[1, 8], [2, 3, 4, 5, 6], [7]]
POOL_COARSE_WEIGHTS = np.array([[2.0, 4.0, 0.0], [4.0, 14.0, 2.0], [0.0, 2.0, 0.0]])
POOL_MASK = np.array([[0, 0, 0, 1, 0, 0, 0, 1], [0, 1, 0, 0, 0, 0, 1, 0]], dtype=float)

# Entries whose print is the misprint itself: compared against the value the
# neighbouring rows imply (here y_2(1), since ReLU keeps positive values).
MISPRINTS = {("o_F", (8,)): 0.111}

# name -> (printed value, tolerance class)
PRINTED = {
    "y1": (Y1, "print"),
    "y2": (Y2, "print"),
    "relu_mask": (RELU_MASK, "exact"),
    "o_F": (FLATTENED, "erratum"),
    "z": (LOGITS, "erratum"),
    "P": (PROBABILITIES, "erratum"),
    "delta_out": (DELTA_OUT, "print"),
    "g2": (GRAD_FC, "erratum"),
    "v_updated": (FC_UPDATED, "erratum"),
    "delta_conv": (DELTA_CONV, "erratum"),
    "g1": (GRAD_CONV, "erratum"),
    "w_updated": (CONV_UPDATED, "print"),
    "b_updated": (BIAS_UPDATED, "print"),
}
