import numpy as np
import pytest
import skimage.data


@pytest.fixture(scope="session")
def rgb_image():
    return skimage.data.astronaut().astype(np.float64) / 255.0
