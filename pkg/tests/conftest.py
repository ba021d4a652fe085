import math

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def mean_and_se(moments):
    mean = moments.sum_r / moments.n
    var = max((moments.sum_r2 - moments.n * mean * mean) / (moments.n - 1), 0.0)
    return mean, math.sqrt(var / moments.n)
