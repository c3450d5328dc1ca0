# SPDX-FileCopyrightText: Magenta ApS
#
# SPDX-License-Identifier: MPL-2.0

import asyncio
from concurrent.futures import Executor
from functools import wraps
from typing import Awaitable, Callable, Iterator, List, Optional, Sequence, Tuple, TypeVar

from more_itertools import pairwise

CallableReturnType = TypeVar("CallableReturnType")
TaskType = TypeVar("TaskType")


def async_to_sync(
    func: Callable[..., Awaitable[CallableReturnType]],
) -> Callable[..., CallableReturnType]:
    """Decorator to run an async function to completion.

    Example:

        @async_to_sync
        async def sleepy(seconds):
            await asyncio.sleep(seconds)
            return seconds

        print(sleepy(5))  # --> 5

    Args:
        func (async function): The asynchronous function to wrap.

    Returns:
        :obj:`sync function`: The synchronous function wrapping the async one.
    """

    @wraps(func)
    def wrapper(*args, **kwargs) -> CallableReturnType:
        return asyncio.run(func(*args, **kwargs))  # type: ignore

    return wrapper


def segment_bounds(lo: int, hi: int, size: int) -> Iterator[Tuple[int, int]]:
    """Split the closed range [lo, hi] into consecutive closed segments.

    Example:

        list(segment_bounds(1, 25, 10))  # --> [(1, 10), (11, 20), (21, 25)]
    """
    if hi < lo:
        return
    edges = list(range(lo, hi + 1, size)) + [hi + 1]
    for start, stop in pairwise(edges):
        yield start, stop - 1


async def gather_segments(
    worker: Callable[[TaskType], CallableReturnType],
    tasks: Sequence[TaskType],
    executor: Optional[Executor] = None,
) -> List[CallableReturnType]:
    """Run worker over every task, returning results in task order.

    Without an executor the tasks run inline on the event loop thread.
    """
    if executor is None:
        return [worker(task) for task in tasks]
    loop = asyncio.get_running_loop()
    futures = [loop.run_in_executor(executor, worker, task) for task in tasks]
    return list(await asyncio.gather(*futures))

