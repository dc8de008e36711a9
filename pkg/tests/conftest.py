import os

os.environ.setdefault("QUENCHLAB_THREADS", "1")
