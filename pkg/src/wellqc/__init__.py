"""wellqc: defect-detection QC for microwell scanner images.

Scanner frames are tiled into 111x111 per-well crops, a small convolutional
classifier (and a logistic-regression baseline) is trained from scratch on
labeled crops, and evaluations emit confusion-matrix QC reports. See the CLI
(``wellqc --help``) for the end-to-end pipeline.
"""

__version__ = "0.1.0"
