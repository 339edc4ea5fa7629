import numpy as np
import pytest

from hsmc.corr import CorrespondenceSet, PointCloud


def make_pairs(src, dst, src_labels=None, dst_labels=None) -> CorrespondenceSet:
    """Correspondence set pairing row k of ``src`` with row k of ``dst``."""
    src = np.asarray(src, dtype=np.float64).reshape(-1, 3)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 3)
    k = np.arange(len(src))
    return CorrespondenceSet(PointCloud(src, src_labels), PointCloud(dst, dst_labels), np.stack([k, k], axis=1))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
