from .geometry import Position3, euclidean_distance, clamp_to_area, link_angles
from .units import dbm_to_watt, watt_to_dbm
from .rng import RngStream, substream
from .log import get_logger, configure_logging
