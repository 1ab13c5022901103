"""スイープセルの並列実行

セルは互いに独立で、それぞれ内部で決定的に動くため、実行順や並列度に
関係なく同じ結果になる。結果は投入順に返す。
"""

from __future__ import annotations

import asyncio
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

from ..colors import gray, green, print_error, print_sweep


class JobStatus(Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class SweepJob:
    """1 つのスイープセル"""

    id: str
    action: Callable[..., Any]
    params: dict = field(default_factory=dict)
    status: JobStatus = JobStatus.PENDING
    result: Any = None
    error: BaseException | None = None
    seconds: float = 0.0


class SweepExecutor:
    """asyncio のセマフォで同時実行数を制限してセルを実行する

    計算本体はスレッドプール（run_in_executor）で動かす。
    1 つでも失敗したセルがあれば、全セルの終了後に最初の例外を送出する。
    """

    def __init__(self, max_concurrency: int = 1):
        if max_concurrency < 1:
            raise ValueError(f"max_concurrency must be >= 1, got {max_concurrency}")
        self.max_concurrency = max_concurrency

    async def _execute_job(self, job: SweepJob, semaphore: asyncio.Semaphore, total: int) -> SweepJob:
        async with semaphore:
            job.status = JobStatus.RUNNING
            started = time.perf_counter()
            try:
                loop = asyncio.get_running_loop()
                job.result = await loop.run_in_executor(None, lambda: job.action(**job.params))
                job.status = JobStatus.COMPLETED
            except Exception as e:
                job.error = e
                job.status = JobStatus.FAILED
            job.seconds = time.perf_counter() - started
            if job.status is JobStatus.COMPLETED:
                print_sweep(f"{green('done')}   {job.id} {gray(f'({job.seconds:.1f}s, {total} cells)')}")
            else:
                print_error(f"cell {job.id} failed: {job.error}")
            return job

    async def _execute(self, jobs: list[SweepJob]) -> list[SweepJob]:
        semaphore = asyncio.Semaphore(self.max_concurrency)
        return await asyncio.gather(*(self._execute_job(j, semaphore, len(jobs)) for j in jobs))

    def run(self, jobs: list[SweepJob]) -> list[Any]:
        """すべてのジョブを実行し、結果を投入順に返す

        Raises:
            Exception: 失敗したセルのうち最初のものの例外
        """
        if not jobs:
            return []
        print_sweep(f"running {len(jobs)} cell(s) with {self.max_concurrency} job(s)")
        if self.max_concurrency == 1:
            # 直列実行ではイベントループを使わず投入順に実行する
            for job in jobs:
                started = time.perf_counter()
                job.status = JobStatus.RUNNING
                job.result = job.action(**job.params)
                job.status = JobStatus.COMPLETED
                job.seconds = time.perf_counter() - started
                print_sweep(f"{green('done')}   {job.id} {gray(f'({job.seconds:.1f}s)')}")
            return [job.result for job in jobs]

        finished = asyncio.run(self._execute(jobs))
        failed = [j for j in finished if j.status is JobStatus.FAILED]
        if failed:
            raise failed[0].error
        return [j.result for j in finished]
