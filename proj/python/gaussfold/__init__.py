"""Split Gaussian data into folds, evaluate fold laws, and validate models on them."""

from ._gaussfold import *  # noqa: F401,F403
from ._gaussfold import __version__  # noqa: F401
