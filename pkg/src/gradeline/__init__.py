"""gradeline: a two-layer visual fruit grading line.

Layer 1 (edge): K-means segmentation, HSV + LBP features, SVM/KNN/NB/RF
classifiers for ripeness. Layer 2 (cloud): pluggable defect detection with a
deterministic brown-spot baseline and a defect-count sub-classification rule.
A conveyor simulator and an operator console drive the two services.
"""

__version__ = "0.1.0"
