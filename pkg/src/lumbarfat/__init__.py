"""Fat quantification in lumbar muscles from axial MRI slices."""

from .errors import (
    DecodeError,
    DegenerateGeometryError,
    DetectionFailedError,
    DuplicateRecordError,
    LumbarFatError,
    StorageError,
    ValidationError,
)
from .raster import GrayImage, Histogram256, SliceMeta, load_image, otsu_threshold
from .livewire import RegionMask, edge_cost_map, lowest_cost_path
from .quantify import QuantParams, QuantResult, fat_percent, sigmoid
from .spine import SpineCenter, extract_hog, locate_by_cord, train_svm
from .fragments import FragmentResult, fragment
from .store import AnalysisRecord, RecordStore

__version__ = "0.1.0"
