"""Numerical laboratory for sub-Riemannian geodesics on metabelian Carnot
groups and their magnetic quotient spaces."""

from .models import (
    GroupPoint,
    GroupSpec,
    Polynomial,
    dilate,
    eng,
    frame_velocity,
    g357,
    make_model,
    n631,
    reflect,
    rotate,
    rotate_momentum,
)
from .reduced import (
    EmptyHillError,
    HillData,
    NormalForm,
    RadialSystem,
    ReducedSystem,
    angular_momentum,
    equilibria,
    hill_radial,
    normal_form,
    radial_from_momentum,
)
from .integrate import EventRecord, Trajectory, find_events, integrate
from .reconstruct import (
    GroupGeodesic,
    MagneticGeodesic,
    homoclinic_geodesic,
    magnetic_from_radial,
    magnetic_lift,
    project_magnetic,
    reconstruct,
)
from .costmaps import (
    AxisProfile,
    CostReport,
    arc_length,
    delta_cost_quadrature,
    delta_cost_time,
    period_theta,
    radial_period,
)
from .classify import (
    GeodesicClass,
    abnormal_family,
    classify,
    conjugate_check,
    is_abnormal,
    maxwell_check,
    metric_line_condition,
)
from .oracles import (
    MagneticSpace,
    ShootingResult,
    TranscriptionPath,
    brute_force_upper_bound,
    elastica_check,
    sequence_experiment,
    shoot_connect,
)
from .values import DIVERGENT, Divergent, is_divergent

__version__ = "0.1.0"
