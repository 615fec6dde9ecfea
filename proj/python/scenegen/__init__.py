"""Scene arrangement synthesis: corpora, joint alignment, training and synthesis."""

from ._scenegen import (
    AlignmentResult,
    CategoryConfig,
    ConfigError,
    DegenerateInputError,
    Error,
    GeneratedCorpus,
    InvalidInputError,
    Model,
    ParseError,
    PermutationSet,
    RigidMotion,
    Scene,
    align_corpus,
    apply_transform,
    canonicalize,
    generate_corpus,
    load_checkpoint,
    project,
    render_svg,
    run_cli,
    save_checkpoint,
    solve_assignment,
    solve_procrustes,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
