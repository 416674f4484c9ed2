"""Sequential stand-in for the task runtime, for tests only.

Each task gets private copies of its arguments, the way a remote worker
would, so a task cannot observe another task's writes.
"""
import copy

import numpy as np


submitted = 0


def submit(fn, *args):
    global submitted
    submitted += 1
    return fn(*copy.deepcopy(args))


def get(handles):
    return list(handles)


def get_xp(use_gpu):
    return np


def num_workers():
    return 3
