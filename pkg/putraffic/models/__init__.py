from putraffic.models.traffic import (
    PERFECT_SENSING,
    SampleVector,
    SamplingPlan,
    SensingModel,
    TrafficParams,
    TransitionCounts,
    all_bit_vectors,
    count_transitions,
    transition_matrix,
    transition_prob,
)
from putraffic.models.sampling import (
    apply_sensing_errors,
    generate_samples,
    read_sample_file,
    sample_frame,
    write_sample_file,
)

__all__ = [
    'PERFECT_SENSING',
    'SampleVector',
    'SamplingPlan',
    'SensingModel',
    'TrafficParams',
    'TransitionCounts',
    'all_bit_vectors',
    'count_transitions',
    'transition_matrix',
    'transition_prob',
    'apply_sensing_errors',
    'generate_samples',
    'read_sample_file',
    'sample_frame',
    'write_sample_file',
]
