"""softattr: scoring and evaluating soft item attributes for critiquing.

Subpackages cover the full pipeline: corpus ingestion and preference
inference (:mod:`softattr.corpus`), BM25 term-based ranking
(:mod:`softattr.textrank`), matrix-factorization embeddings
(:mod:`softattr.embeddings`), attribute models (:mod:`softattr.attrmodels`),
rank-correlation evaluation (:mod:`softattr.evaluation`), annotation task
sampling (:mod:`softattr.tasksampler`), and the judgment-collection HTTP
service (:mod:`softattr.service`).
"""

__version__ = "0.1.0"
