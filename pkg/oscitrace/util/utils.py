# ============================*
 # ** Copyright UCAR (c) 2020
 # ** University Corporation for Atmospheric Research (UCAR)
 # ** National Center for Atmospheric Research (NCAR)
 # ** Research Applications Lab (RAL)
 # ** P.O.Box 3000, Boulder, Colorado, 80307-3000, USA
 # ============================*



"""
Program Name: utils.py
"""

__author__ = 'Tatiana Burek'

import hashlib
import json
import math
import multiprocessing
import os
import tempfile

import numpy as np
from scipy import stats


def compensated_sum(values):
    """Correctly rounded sum of the values in the given order.

        Args:
            values: iterable of real numbers

        Returns:
            float
    """
    return math.fsum(float(value) for value in values)


def canonical_json(obj):
    """Deterministic JSON text: sorted keys, no whitespace, repr floats"""
    return json.dumps(obj, sort_keys=True, separators=(',', ':'))


def content_hash(obj):
    """sha256 hex digest of the canonical JSON of obj"""
    return hashlib.sha256(canonical_json(obj).encode('utf-8')).hexdigest()


def loglog_slope(x_values, y_values):
    """Least-squares slope of log|y| against log x.

        Args:
            x_values: positive abscissae
            y_values: nonzero ordinates

        Returns:
            the scipy.stats.linregress result of the log-log data
    """
    x_arr = np.asarray(x_values, dtype=float)
    y_arr = np.abs(np.asarray(y_values, dtype=float))
    mask = (x_arr > 0) & (y_arr > 0)
    if np.count_nonzero(mask) < 2:
        raise ValueError('at least two positive points are needed for a log-log slope')
    return stats.linregress(np.log(x_arr[mask]), np.log(y_arr[mask]))


def write_atomic(path, text):
    """Writes text to a temporary file next to path and renames it into place.

        Args:
            path: destination file
            text: content as str
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    handle, tmp_path = tempfile.mkstemp(dir=directory, prefix='.tmp_', suffix=os.path.basename(path))
    try:
        with os.fdopen(handle, 'w', newline='') as tmp_file:
            tmp_file.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def write_json(path, obj):
    """Writes obj as indented, key-sorted JSON through write_atomic"""
    write_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + '\n')


def resolve_num_threads(num_threads):
    """-1 means all available cores, anything below 1 means serial"""
    num_threads = int(num_threads)
    if num_threads == -1:
        num_threads = multiprocessing.cpu_count()
    return max(num_threads, 1)


def map_tasks(func, args_list, num_threads=1):
    """Applies func to every argument tuple, in a worker pool when num_threads > 1.

        Args:
            func: picklable module-level function
            args_list: list of argument tuples
            num_threads: pool size, -1 for all cores

        Returns:
            list of results in the order of args_list
    """
    num_threads = resolve_num_threads(num_threads)
    if num_threads <= 1 or len(args_list) <= 1:
        return [func(*args) for args in args_list]
    pool = multiprocessing.Pool(num_threads)
    try:
        results = [pool.apply_async(func, args) for args in args_list]
        return [res.get() for res in results]
    finally:
        pool.close()
        pool.join()
