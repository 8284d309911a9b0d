# Stancelab CLI Commands Module
from .ingest import ingest_cmd
from .synth import synth_cmd
from .labelprop import labelprop_cmd
from .embed import embed_cmd
from .project import project_cmd
from .cluster import cluster_cmd
from .eval import eval_cmd
from .rwc import rwc_cmd
from .ami import ami_cmd
from .lexicon import lexicon_cmd
from .pipeline import pipeline_cmd

__all__ = [
    'ingest_cmd', 'synth_cmd', 'labelprop_cmd', 'embed_cmd', 'project_cmd', 'cluster_cmd',
    'eval_cmd', 'rwc_cmd', 'ami_cmd', 'lexicon_cmd', 'pipeline_cmd',
]
