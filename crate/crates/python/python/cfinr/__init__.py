"""Cross-frequency implicit neural representations.

Arrays are numpy ``float64`` of shape ``(n1, n2, n3)``; 2-D inputs get a trailing band axis.
"""

import numpy as np

from . import _native
from ._native import Tensor, verify

__all__ = [
    "Tensor", "to_tensor", "to_array", "hwt", "ihwt", "psnr", "ssim", "nrmse",
    "load", "save", "smooth_tucker", "textured_image", "random_mask", "add_noise",
    "fit", "inpaint", "denoise", "verify",
]


def to_tensor(a):
    if isinstance(a, Tensor):
        return a
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3:
        raise ValueError(f"expected a 2-D or 3-D array, got shape {a.shape}")
    return Tensor(list(a.shape), a.ravel(order="F").tolist())


def to_array(t):
    return np.asarray(t.data, dtype=np.float64).reshape(t.dims, order="F")


def _mask(m, shape):
    m = np.asarray(m, dtype=bool)
    if m.ndim == 2:
        m = m[:, :, None]
    return np.broadcast_to(m, shape).ravel(order="F").tolist()


def hwt(a):
    return [to_array(b) for b in _native.hwt(to_tensor(a))]


def ihwt(blocks):
    return to_array(_native.ihwt([to_tensor(b) for b in blocks]))


def psnr(ref, est):
    return _native.psnr(to_tensor(ref), to_tensor(est))


def ssim(ref, est):
    return _native.ssim(to_tensor(ref), to_tensor(est))


def nrmse(ref, est):
    return _native.nrmse(to_tensor(ref), to_tensor(est))


def load(path):
    return to_array(_native.load_tensor(str(path)))


def save(path, a):
    _native.save_tensor(str(path), to_tensor(a))


def smooth_tucker(dims, ranks, seed=0):
    return to_array(_native.smooth_tucker(list(dims), list(ranks), seed))


def textured_image(n1, n2, n3, seed=0):
    return to_array(_native.textured_image(n1, n2, n3, seed))


def random_mask(shape, sr, seed=0):
    m = _native.random_mask(list(shape), sr, seed)
    return np.asarray(m, dtype=bool).reshape(shape, order="F")


def add_noise(clean, case, seed=0):
    noisy, mask = _native.add_noise(to_tensor(clean), case, seed)
    a = to_array(noisy)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool).reshape(a.shape, order="F")
    return a, mask


def _unwrap(res):
    for k in ("recovered", "sparse"):
        if k in res:
            res[k] = to_array(res[k])
    return res


def fit(data, reference=None, **options):
    ref = None if reference is None else to_tensor(reference)
    return _unwrap(_native.fit_regression(to_tensor(data), ref, **options))


def inpaint(data, mask, reference=None, **options):
    t = to_tensor(data)
    ref = None if reference is None else to_tensor(reference)
    return _unwrap(_native.fit_inpainting(t, _mask(mask, tuple(t.dims)), ref, **options))


def denoise(data, mask=None, reference=None, **options):
    t = to_tensor(data)
    m = None if mask is None else _mask(mask, tuple(t.dims))
    ref = None if reference is None else to_tensor(reference)
    return _unwrap(_native.denoise(t, m, ref, **options))
