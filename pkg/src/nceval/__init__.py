"""Narrative-consistency evaluation for character-controlled story images.

Three families of scores compare generated characters with references:

* visual consistency (CN): Fréchet distance between embedding Gaussians;
* spatial consistency (SR, LA): Dice and mean IoU of character masks;
* form consistency (BDP, MC, ADS): Hausdorff, modified Hausdorff and average
  surface distance between mask contours.

They are combined into a single Overall score in [0, 6] by
:func:`nceval.scoring.aggregate_overall`.
"""

__version__ = "0.1.0"

from .attention import AttentionMap, ConstantMapParams, RegionSpec, build_constant_map, mask_attention_loss
from .distribution import (
    EmbeddingSet,
    FrechetResult,
    GaussianStats,
    cvc_score,
    fit_gaussian,
    frechet_distance,
    mean_cosine_similarity,
    sqrtm_psd,
)
from .masks import BinaryMask, ContourPointSet, OverlapResult, extract_contour, load_mask, mean_overlap, overlap
from .scoring import RawMetricVector, OverallScore, aggregate_overall, check_desiderata, f1, f2, f3, f4
from .surface import (
    DistanceField,
    SurfaceDistances,
    build_distance_field,
    directed_max_distance,
    directed_mean_distance,
    surface_distances,
)
