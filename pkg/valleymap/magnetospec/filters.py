"""Gradient and background filters for charge-stability scans."""

import numpy as np
import structlog
from scipy import ndimage

from ..models import ErrorCode, TransitionScan, ValleyMapError

logger = structlog.get_logger(__name__)

# Rows (1, 2, 1), (0, 0, 0), (-1, -2, -1): derivative along axis 0, smoothing along axis 1
SOBEL_KERNEL = np.array([[1.0, 2.0, 1.0], [0.0, 0.0, 0.0], [-1.0, -2.0, -1.0]])
BACKGROUND_KERNEL_FACTOR = 3


def sobel_filter(image: np.ndarray, axis: int = 1) -> np.ndarray:
    """Convolve with the Sobel kernel oriented along ``axis``, replicating border pixels.

    Scan images are indexed [iB, iV], so the default differentiates along the
    voltage sweep. A step of height 1 gives a response of 4 on the two pixels
    next to the edge; a ramp of slope s gives 8·s.
    """
    data = np.asarray(image, dtype=float)
    if data.ndim != 2 or min(data.shape) < 3:
        raise ValleyMapError(
            ErrorCode.INVALID_INPUT,
            "Sobel filtering needs an image of at least 3x3 pixels",
            {"shape": list(data.shape)},
        )
    if axis not in (0, 1):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, f"Invalid filter axis {axis}")
    kernel = SOBEL_KERNEL if axis == 0 else SOBEL_KERNEL.T
    return ndimage.convolve(data, kernel, mode="nearest")


def background_kernel(transition_width: int) -> int:
    """Median window length: three transition widths, rounded up to an odd count."""
    if transition_width < 1:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Transition width must be at least one sample")
    size = BACKGROUND_KERNEL_FACTOR * int(transition_width)
    return size if size % 2 else size + 1


def subtract_background(image: np.ndarray, transition_width: int, axis: int = 1) -> np.ndarray:
    """Remove a running median of every sweep line.

    ``transition_width`` is the extent of a transition in samples along ``axis``.
    """
    data = np.asarray(image, dtype=float)
    if data.ndim != 2:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Background subtraction needs a 2D image")
    size = background_kernel(transition_width)
    if size > data.shape[axis]:
        raise ValleyMapError(
            ErrorCode.INVALID_INPUT,
            "Median kernel exceeds the sweep line length",
            {"kernel": size, "line_length": data.shape[axis]},
        )
    window = (1, size) if axis == 1 else (size, 1)
    background = ndimage.median_filter(data, size=window, mode="nearest")
    return data - background


def filter_scan(scan: TransitionScan, transition_width: int) -> TransitionScan:
    """Sobel gradient along V followed by median background removal."""
    gradient = sobel_filter(scan.signal, axis=1)
    filtered = subtract_background(gradient, transition_width, axis=1)
    logger.debug("Scan filtered", label=scan.label, shape=list(filtered.shape), kernel=background_kernel(transition_width))
    return TransitionScan(B=scan.B, V=scan.V, signal=filtered, label=scan.label)
