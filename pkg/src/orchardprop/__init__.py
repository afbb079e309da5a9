"""Direction-dependent LoRa propagation modeling for row-structured orchards."""

from .calibration import (FitResult, error_stats, evaluate_fit, fit_canopy_model,
                          one_slope_exponent)
from .dataset import (MeasurementDataset, PacketRecord, aggregate_waypoints, dataset_from_rssi,
                      parse_log, read_positions)
from .geometry import (LinkGeometry, OrchardLayout, Point2D, count_canopy_intersections,
                       link_geometry, palermo_layout, tree_positions)
from .models import (FfzFractions, FlogOptions, ModelParams, RadioConfig, evaluate_pl,
                     ffz_fractions, flog_exponent, flog_pl, fspl, itu_total, itu_vegetation_loss,
                     multiwall, pmw, predict_rssi, proposed_pl, reference_pl0)
from .simulate import (GridSpec, HeatmapGrid, Trajectory, error_heatmap, model_heatmap,
                       palermo_grid, shadowing_sample, trajectory_rssi, zigzag_path)

__version__ = "0.1.0"
