"""Symmetric 6-point triangle rule, exact for polynomials of degree 4."""
import numpy as np

_A1, _W1 = 0.445948490915964886318329253883, 0.223381589678011465944827282316
_A2, _W2 = 0.091576213509770743459571463402, 0.109951743655321867638506050348

#: barycentric coordinates of the quadrature points, shape (6, 3)
BARYCENTRIC = np.array(
    [
        [1 - 2 * _A1, _A1, _A1],
        [_A1, 1 - 2 * _A1, _A1],
        [_A1, _A1, 1 - 2 * _A1],
        [1 - 2 * _A2, _A2, _A2],
        [_A2, 1 - 2 * _A2, _A2],
        [_A2, _A2, 1 - 2 * _A2],
    ]
)
#: weights normalised to sum to one; multiply by the triangle area
WEIGHTS = np.array([_W1, _W1, _W1, _W2, _W2, _W2])
DEGREE = 4

BARYCENTRIC.setflags(write=False)
WEIGHTS.setflags(write=False)
