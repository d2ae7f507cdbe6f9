"""Transcript-driven edit planning for talking-head parameter tracks.

Modules: ``core`` (phones, visemes, costs), ``ingest`` (file formats),
``search`` (viseme search), ``plan`` (retiming and blending), ``edl``
(outputs), ``stats`` (corpus statistics), ``synth`` (synthetic data) and
``cli``.
"""

__version__ = "0.1.0"
