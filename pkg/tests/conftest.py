import warnings

import numpy as np
import pytest

from csbm.model import Instance, ModelParams, sample_instance


@pytest.fixture(autouse=True)
def _silence_subcritical_degree_warnings():
    from csbm.model import SubcriticalDegreeWarning

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SubcriticalDegreeWarning)
        yield


def make_instance(edges, n, p, lam=0.5, mu=1.0, d=3.0, B=None, sigma=None, u=None):
    """Hand-built instance with explicit edges and covariates."""
    params = ModelParams.from_np(lam=lam, mu=mu, d=d, n=n, p=p)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if B is None:
        B = np.zeros((n, p))
    return Instance(params=params, edges=edges, B=np.asarray(B, dtype=float),
                    sigma=sigma, u=u, seed=0)


def seeded(lam, mu, d, n, p, seed):
    return sample_instance(ModelParams.from_np(lam=lam, mu=mu, d=d, n=n, p=p), seed)
