"""Existential-rules toolkit: chase engines, acyclicity analysis, stable sets."""

__version__ = "0.1.0"

from .terms import (
    Atom,
    Const,
    FreshVars,
    Func,
    Var,
    as_nulls,
    freeze,
    isomorphic,
)
from .homomorphism import core, entails, equivalent, homomorphisms
from .rules import (
    Rule,
    apply,
    is_self_blocking,
    is_useful,
    pos,
    skolemize,
    skolemize_facts,
)
from .parser import KnowledgeBase, KBError, ParseError, ValidationError, parse, parse_atoms, print_kb
from .chase import AnswerResult, Budget, ChaseResult, Criterion, answer, run
from .unification import (
    DependencyGraph,
    Unifier,
    UnifierCapError,
    agglomerate,
    compatible,
    compatible_sequence,
    depends,
    grd,
    self_blocking_unifier,
    unified_rule,
    unifiers,
)
from .acyclicity import (
    AcyclicityVerdict,
    AnalysisReport,
    MarkingFunction,
    PositionGraph,
    analyze,
    build,
    check,
    check_u_plus,
    mark_nothing,
    scc_check,
    wa_marking,
)
from .nonmonotonic import (
    StableSearchResult,
    StableSet,
    TreeBudget,
    TreeNode,
    expand,
    nm_analyze,
    nm_depends,
    stable_sets,
)
