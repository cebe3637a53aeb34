import numpy as np
import pytest

from platoon_lab import PlatoonConfig, RationalTF

# Benchmark models used throughout: a double-integrator vehicle with a
# lead-lag controller that keeps every closed-loop block stable for any
# positive feedback gain.
VEHICLE = RationalTF(num=(1.0,), den=(0.0, 0.0, 1.0))
CONTROLLER = RationalTF(num=(3.0, 43.0, 110.0), den=(1.0, 2.9, 1.0))


def make_cfg(n, eps=0.5, mu=1.0, vehicle=VEHICLE, controller=CONTROLLER, ref_distance=1.0):
    """Homogeneous benchmark platoon with scalar gain and asymmetry."""
    gains = (float(mu),) * (n - 1)
    asym = (float(eps),) * (n - 1)
    return PlatoonConfig(n=n, gains=gains, asymmetries=asym,
                         vehicle=vehicle, controller=controller,
                         ref_distance=ref_distance)


@pytest.fixture
def benchmark_cfg():
    return make_cfg(20, eps=0.5)


def dense_reduced_eigs(cfg):
    """Independent oracle: dense general eigensolver on the reduced Laplacian."""
    from platoon_lab import build_laplacian, reduce_laplacian

    R = reduce_laplacian(build_laplacian(cfg))
    return np.sort(np.linalg.eigvals(R).real)
