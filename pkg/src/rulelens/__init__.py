"""rulelens: if-then explanations of black-box classifiers.

A rule DSL with parser and renderers, deterministic execution semantics
with faithfulness/simulatability/coverage/precision metrics, a synthetic
benchmark generator with planted ground-truth rules, budget-metered
baseline explainers, and a search that finds the most faithful explanation
of a batch of predictions without spending a single classifier call.
"""

from .executor import (
    EvalReport,
    Verdict,
    apply_explanation,
    condition_holds,
    coverage_precision,
    evaluate,
    faithfulness,
    simulatability,
)
from .explainer import (
    CandidateSet,
    SearchConfig,
    SearchStrategy,
    beam_conjunction_search,
    ensemble_subsets,
    explain,
    fit_quantifier,
    per_feature_search,
)
from .lang import (
    BoolOp,
    Comparator,
    Condition,
    Explanation,
    Node,
    ParseError,
    Quantifier,
    parse,
    quantifier_confidence,
    render,
    render_with_confidence,
)
from .schema import (
    Example,
    FeatureKind,
    FeatureSchema,
    FeatureSpec,
    LabelKind,
    LabeledBatch,
)
from .taskforge import (
    ComplexityDescriptor,
    SyntheticTask,
    all_descriptors,
    binarize,
    delinearize,
    generate_task,
    linearize,
    sample_explanation,
    sample_schema,
)

__version__ = "0.1.0"
