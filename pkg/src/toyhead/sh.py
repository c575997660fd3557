"""Real spherical harmonics (bands 0..2) and Lambertian irradiance.

The 27 illumination coefficients used throughout the package are 9 real SH
coefficients per RGB channel, ordered band-major:

    [Y00, Y1-1, Y10, Y11, Y2-2, Y2-1, Y20, Y21, Y22]

Irradiance at a surface normal n is the SH-convolved radiance
E(n) = sum_lm A_l c_lm Y_lm(n) with the standard clamped-cosine band gains
A = [pi, 2*pi/3, pi/4].
"""

from __future__ import annotations

import numpy as np

N_SH_BANDS = 3
N_SH_COEFFS = 9  # bands 0..2

# normalization constants of the real SH basis
_C0 = 0.28209479177387814  # 1/2 sqrt(1/pi)
_C1 = 0.4886025119029199  # sqrt(3/(4 pi))
_C2 = np.array(
    [
        1.0925484305920792,  # sqrt(15/(4 pi))   xy
        1.0925484305920792,  # yz
        0.31539156525252005,  # sqrt(5/(16 pi))  3z^2 - 1
        1.0925484305920792,  # xz
        0.5462742152960396,  # sqrt(15/(16 pi))  x^2 - y^2
    ]
)

# clamped-cosine convolution gains per band, repeated per coefficient
BAND_GAINS = np.array(
    [np.pi] + [2.0 * np.pi / 3.0] * 3 + [np.pi / 4.0] * 5
)

# indices of basis functions that are odd under x -> -x (Y11, Y2-2, Y21)
ODD_X_COEFFS = (3, 4, 7)


def sh_basis(normals: np.ndarray) -> np.ndarray:
    """Evaluate the 9 real SH basis functions at unit directions.

    normals: (..., 3) array, assumed unit length.
    Returns (..., 9).
    """
    n = np.asarray(normals, dtype=np.float64)
    x, y, z = n[..., 0], n[..., 1], n[..., 2]
    out = np.empty(n.shape[:-1] + (N_SH_COEFFS,), dtype=np.float64)
    out[..., 0] = _C0
    out[..., 1] = _C1 * y
    out[..., 2] = _C1 * z
    out[..., 3] = _C1 * x
    out[..., 4] = _C2[0] * x * y
    out[..., 5] = _C2[1] * y * z
    out[..., 6] = _C2[2] * (3.0 * z * z - 1.0)
    out[..., 7] = _C2[3] * x * z
    out[..., 8] = _C2[4] * (x * x - y * y)
    return out


def irradiance(normals: np.ndarray, sh_coeffs: np.ndarray) -> np.ndarray:
    """Lambertian irradiance per RGB channel, not clamped.

    normals: (..., 3) unit directions.
    sh_coeffs: flat length-27 array (9 per channel) or (3, 9).
    Returns (..., 3). Values may be negative for adversarial coefficients;
    callers that shade clamp at zero.
    """
    coeffs = np.asarray(sh_coeffs, dtype=np.float64).reshape(3, N_SH_COEFFS)
    basis = sh_basis(normals)
    return basis @ (coeffs * BAND_GAINS).T


def symmetric_light(sh_coeffs: np.ndarray) -> np.ndarray:
    """Zero the components that are odd under x -> -x, per channel."""
    coeffs = np.array(sh_coeffs, dtype=np.float64).reshape(3, N_SH_COEFFS)
    coeffs[:, list(ODD_X_COEFFS)] = 0.0
    return coeffs.reshape(-1)
