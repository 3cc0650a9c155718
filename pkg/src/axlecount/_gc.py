"""Pause the cyclic garbage collector around allocation-heavy, cycle-free work."""

import contextlib
import gc


@contextlib.contextmanager
def gc_paused():
    # the pipeline and simulator build no reference cycles; collection
    # passes over a growing heap of small objects would only cost time
    enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if enabled:
            gc.enable()
