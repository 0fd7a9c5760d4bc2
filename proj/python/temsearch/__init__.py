"""Personalized product search: embedding models, training, evaluation."""

from ._temsearch import *  # noqa: F401,F403
