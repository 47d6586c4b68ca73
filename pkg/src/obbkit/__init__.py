"""Oriented bounding box toolkit: (sin, cos) angle coding, an angle loss on
their cross product, exact rotated IoU, a conv/attention RPN head forward
pass, score-aware proposal labelling and VOC-style evaluation."""

from .geometry import OBB, iou_matrix, min_area_rect, obb_to_polygon, rotated_iou
from .codec import OBB6, DeltaOffsets, canonicalize, decode, encode
from .loss import BoxLoss, LossParams, loss_sweep, reg_loss, reg_loss_grad, tlf_angle_loss
from .assign import Label, cdla_assign, max_iou_assign, sample
from .evaluation import APMode, Detection, GtRecord, average_precision, match_detections, mean_ap

__version__ = "0.1.0"
