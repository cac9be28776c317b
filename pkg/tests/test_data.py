import numpy as np
import pytest

from moment_forge.data import Dataset


def test_coerces_1d_columns():
    ds = Dataset(x=np.array([1.0, 2.0, 3.0]), z=np.array([4.0, 5.0, 6.0]))
    assert ds.x.shape == (3, 1)
    assert ds.z.shape == (3, 1)
    assert ds.n == 3 and ds.x_dim == 1 and ds.z_dim == 1


def test_unconditional_dataset_has_no_z():
    ds = Dataset(x=np.zeros((4, 2)))
    assert ds.z is None
    assert ds.z_dim == 0
    assert np.array_equal(ds.joint(), ds.x)


def test_joint_stacks_x_and_z():
    ds = Dataset(x=np.ones((3, 2)), z=np.zeros((3, 1)))
    j = ds.joint()
    assert j.shape == (3, 3)
    assert np.allclose(j[:, :2], 1.0) and np.allclose(j[:, 2], 0.0)


def test_row_count_mismatch_rejected():
    with pytest.raises(ValueError):
        Dataset(x=np.zeros((3, 1)), z=np.zeros((4, 1)))


def test_empty_rejected():
    with pytest.raises(ValueError):
        Dataset(x=np.empty((0, 2)))


def test_subset_preserves_pairing():
    ds = Dataset(x=np.arange(10.0).reshape(5, 2), z=np.arange(5.0))
    sub = ds.subset(np.array([0, 3]))
    assert sub.n == 2
    assert np.allclose(sub.x, [[0.0, 1.0], [6.0, 7.0]])
    assert np.allclose(sub.z[:, 0], [0.0, 3.0])
