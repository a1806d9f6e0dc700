config = {

    # correlation filter defaults, tuned to the values common for KCF
    'kcf': {
        'lambda': 1e-4,
        'kernel_sigma': 0.5,
        'learning_rate': 0.02,
        'output_sigma_factor': 0.04,  # of the window, i.e. 0.1 of a target padded by 1.5
        'cell_size': 4,
        'kernel': 'gaussian',
    },

    # single filter, multiple ROIs
    'grid': {
        'full_roi_size': 96,
        'roi_size': 48,
        'grid_n': 4,
        'psr_threshold': 7.0,
        'fusion': 'soft',
        'reuse_training_features': True,
        'roi_mapping': False,
    },

    'features': {
        'kind': 'fhog',
        'cell_size': 4,
        'channel_subset': None,
        'band_selection': 'central',
    },

    'tracker': {
        'coasting_limit': 10,
        'psr_exclusion': 11,
    },

    'registration': {
        'max_keypoints': 500,
        'ratio': 0.8,
        'iterations': 1000,
        'inlier_tol': 2.0,
        'channel': None,
    },

    'sim': {
        'noise_scale': 16.0,
        'octaves': 3,
        'contrast': 0.7,
    },
}
