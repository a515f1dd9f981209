"""Coherence-based CDR estimation and dereverberation for two-microphone arrays."""

from .coherence import CoherenceModels, estimate_coherence, estimate_psd, mix_coherence
from .enhancement import DereverbResult, PostfilterConfig, StreamingPostfilter, dereverberate
from .estimators import ESTIMATORS, diffuseness, estimate_cdr
from .filterbank import ConfigurationError, FilterbankConfig, Spectrogram, analyze, synthesize

__all__ = [
    "CoherenceModels",
    "ConfigurationError",
    "DereverbResult",
    "ESTIMATORS",
    "FilterbankConfig",
    "PostfilterConfig",
    "Spectrogram",
    "StreamingPostfilter",
    "analyze",
    "dereverberate",
    "diffuseness",
    "estimate_cdr",
    "estimate_coherence",
    "estimate_psd",
    "mix_coherence",
    "synthesize",
]
