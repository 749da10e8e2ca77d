"""Nondistortionary belief elicitation: mechanisms, alignment and verification."""

from .alignment import (
    AlignmentCertificate,
    CertificateCheck,
    Decomposition,
    NotAligned,
    RankExceeded,
    SingularGammaError,
    check_blockwise,
    check_m_decomposable,
    check_task_block_wise,
    check_taskwise,
    classify_gamma_family,
    find_individual_certificate,
    find_joint_certificate,
    moment_questions,
    rank_decompose,
    regauge,
    supplemental_profile,
    verify_certificate,
)
from .gauge import (
    CycleObstruction,
    Potential,
    RankDeficient,
    build_potential,
    check_assumption_cycle_length,
    check_assumption_independence,
    compute_edge_lengths,
    cycle_product,
    edge_length,
    perturb_edge_lengths,
)
from .graph import (
    AdjacencyGraph,
    AdjacencyWitness,
    build_graph,
    is_adjacent,
    minimum_cycle_basis,
    structured_mcb,
    to_dot,
)
from .mechanisms import (
    bdm_on_question,
    build_bdm,
    build_belief_revelation,
    build_coarse_csr,
    build_csr,
    build_joint_bdm,
    induced_actions,
    optimal_report,
)
from .model import (
    Belief,
    PaymentScheme,
    QuestionProfile,
    Task,
    delta,
    evaluate_payment,
    expected_value,
    product_task,
    project_bar,
    task_optimal_actions,
)
from .verify import (
    VerificationReport,
    VerifyConfig,
    detect_distortion,
    enumerate_simplex,
    verify_incentivizable,
    verify_robust,
)

__version__ = "0.1.0"
