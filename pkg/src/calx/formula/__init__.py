from calx.formula.ast import (
    ArrayRead,
    ArraySort,
    ArrayWrite,
    BinOp,
    BOOL,
    BoolLit,
    bound_vars_on_path,
    conj,
    conjuncts,
    COUNT,
    EXISTS,
    Expr,
    FALSE,
    FORALL,
    free_names,
    free_vars,
    fresh_name,
    has_metavars,
    INT,
    IntLit,
    instantiate_metavars,
    is_meta_name,
    MAX,
    meta_vars,
    MetaVar,
    MIN,
    negate,
    parse_sort,
    QuantOp,
    QUANT_OPS,
    Quantified,
    Sort,
    substitute,
    Substitution,
    subterm_paths,
    SUM,
    TRUE,
    UnaryOp,
    Var,
)
from calx.formula.parse import (
    LATEX_MAP,
    parse_declarations,
    parse_expr_list,
    parse_formula,
    parse_ident_list,
    scan_metavar_names,
    split_top,
    tokenize,
)
from calx.formula.pprint import pretty_print, Span
