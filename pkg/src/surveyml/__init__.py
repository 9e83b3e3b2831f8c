"""Design-based survey statistics and ML evaluation toolkit.

Submodules
----------
ingest     CSV / SAS Transport (XPT v5) readers, IBM float codec, merging
design     survey design frame construction, validation, domain subsetting
estimate   weighted means/proportions with Taylor-linearized variance
replicate  jackknife / BRR / bootstrap replicate weights and combination
metrics    survey-weighted AUROC, sensitivity/specificity, ROC/PR curves
cv         PSU-stratified and random K-fold construction and the CV runner
model      weighted logistic regression, sandwich variance, design AIC/BIC
boost      weighted gradient-boosted trees (reference implementation)
calibrate  poststratification, raking, weight trimming
synth      synthetic finite populations with a census truth oracle
cli        command-line application and JSON reports
"""

__version__ = "0.1.0"

from ._kernels import backend as kernel_backend  # noqa: F401
