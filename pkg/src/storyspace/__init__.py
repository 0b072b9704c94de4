"""storyspace: stage-scoped multi-agent story chat with growing characters.

An engine plus session service that turns a stage-segmented story corpus into
an interactive experience: retrieval-backed character rounds whose knowledge
accumulates with the narrative, proactive trans-temporal sharing derived from
inter-character discussion, and user-selectable scene customization.
"""

from .engine import EngineConfig, StoryEngine
from .errors import StorySpaceError
from .ingest import StageKnowledgeBase, StoryManifest, load_knowledge_base
from .retrieval import ChunkIndex, retrieve
from .service import create_app

__version__ = "0.1.0"

__all__ = [
    "ChunkIndex",
    "EngineConfig",
    "StageKnowledgeBase",
    "StoryEngine",
    "StoryManifest",
    "StorySpaceError",
    "create_app",
    "load_knowledge_base",
    "retrieve",
    "__version__",
]
