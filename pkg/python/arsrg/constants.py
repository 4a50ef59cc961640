"""Constants"""
import os

# Files
BASEDIR = os.path.expanduser(os.path.join("~", ".arsrg"))
BASELOGDIR = os.path.join(BASEDIR, "logs")

# Descriptors
DESCRIPTOR_SIZE = 128

# Document formats
ARSRG_FORMAT = "ARSRG"
ARSRG_FORMAT_VERSION = 1
CODEBOOK_FORMAT = "ARSRG-CB"
CODEBOOK_FORMAT_VERSION = 1
MATCH_REPORT_FORMAT = "ARSRG-MR"
MATCH_REPORT_FORMAT_VERSION = 1
KEYPOINT_HEADER = "ARSRG-KP 1"
LABEL_MAP_HEADER = "ARSRG-LM 1"
