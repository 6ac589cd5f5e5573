"""Red blood cell abnormality pipeline.

Segmentation of stained smear images, 124-dimensional morphological and
textural cell features, feature-space resampling for imbalanced classes,
cost-sensitive RBF-SVM classification, and cell-based evaluation.
"""

__version__ = "0.1.0"
