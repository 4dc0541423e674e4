from rich.console import Console
from rich.progress import Progress
import concurrent.futures as futures
import multiprocessing as mp


def __indexed_call(index, handler, args):
    """Runs handler(*args) and returns (index, result), so out-of-order results can be put back in order"""
    return index, handler(*args)


def multiprocess(arg_list, handler, max_workers=20, text: str = "progress..."):
    """
    Runs handler over every argument tuple in arg_list, spread over a pool of spawned processes. The handler must be
    a module-level function, each worker process imports it from scratch
    :param arg_list: list of argument tuples, one per call
    :param handler: function to be invoked for every tuple
    :param max_workers: maximum number of processes, with 1 everything runs in the calling process
    :param text: progress bar label
    :return: list of results, in the same order as arg_list
    """
    arg_list = list(arg_list)
    console = Console(stderr=True)  # stdout is reserved for JSON answers

    if max_workers <= 1 or len(arg_list) <= 1:
        results = []
        with Progress(console=console) as progress:
            task = progress.add_task(text, total=len(arg_list))
            for args in arg_list:
                results.append(handler(*args))
                progress.advance(task)
        return results

    indexed = []
    with futures.ProcessPoolExecutor(max_workers=min(max_workers, len(arg_list)),
                                     mp_context=mp.get_context("spawn")) as executor:
        pending = [executor.submit(__indexed_call, i, handler, args) for i, args in enumerate(arg_list)]
        with Progress(console=console) as progress:
            task = progress.add_task(text, total=len(pending))
            for future in futures.as_completed(pending):
                indexed.append(future.result())  # re-raises the worker exception, if any
                progress.advance(task)

    return [result for _, result in sorted(indexed, key=lambda a: a[0])]
