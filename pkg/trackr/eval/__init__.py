from .metrics import (
    Trajectory, Timing, EvalReport, center_errors, cle, precision_curve,
    precision_from_errors, evaluate_target, aggregate, report, report_to_dict,
    write_report, read_trajectory, read_ground_truth_trajectory, load_trajectories,
)
