#!/usr/bin/env python3
"""
End-to-end verification workflow against a running RCS Verify service.

For each scenario the script:
1. Builds a sample (simulated circuit, uniform noise or a pinned-prefix spoof)
2. Scores it through /api/xeb, /api/heatmap, /api/nist, /api/spectrum
3. Measures its transport distance from a uniform baseline through /api/wdist
4. Saves the raw responses and a markdown summary

Start the service first: uvicorn app.main:app --port 8010
"""

import sys
from pathlib import Path

# Add app directory to path before any app imports
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import argparse
import asyncio
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

import httpx
import orjson
import structlog
from dotenv import load_dotenv

load_dotenv()

# ruff: noqa: E402
from app.core.logging import setup_logging
from app.models.samples import SampleSet
from app.services import sample_store

setup_logging()
logger = structlog.get_logger()

CIRCUIT = {"n_qubits": 10, "m_cycles": 12, "seed": 7}


def _lines(sample: SampleSet) -> List[str]:
    return ["".join("1" if b else "0" for b in row) for row in sample.bits]


class ServiceWorkflowTester:
    """Drives the verification endpoints with a fixed set of scenarios."""

    def __init__(self, base_url: str, output_dir: str, samples: int) -> None:
        self.base_url = base_url.rstrip("/")
        self.output_dir = Path(output_dir)
        self.samples = samples
        self.results: List[Dict[str, Any]] = []
        self.output_dir.mkdir(parents=True, exist_ok=True)

    async def post(
        self,
        client: httpx.AsyncClient,
        endpoint: str,
        payload: Dict[str, Any],
        timeout: float = 60.0,
    ) -> Dict[str, Any]:
        """POST with retries on timeouts and 5xx responses."""
        last_error: Optional[str] = None
        max_retries = 3
        backoff_factor = 1.5

        for attempt in range(max_retries):
            try:
                response = await client.post(
                    f"{self.base_url}/api/{endpoint}",
                    json=payload,
                    timeout=timeout * (backoff_factor**attempt),
                )
                if response.status_code < 500:
                    response.raise_for_status()
                    return response.json()
                last_error = f"HTTP error {response.status_code}: {response.text}"
            except httpx.ReadTimeout:
                last_error = f"request timed out after {timeout * (backoff_factor ** attempt):.1f}s"
            if attempt < max_retries - 1:
                await asyncio.sleep(backoff_factor**attempt)

        raise RuntimeError(f"/api/{endpoint} failed after {max_retries} attempts: {last_error}")

    async def scenario_lines(self, client: httpx.AsyncClient) -> Dict[str, List[str]]:
        simulated = await self.post(
            client,
            "simulate",
            {"circuit": CIRCUIT, "samples": self.samples, "sample_seed": 1},
        )
        n = CIRCUIT["n_qubits"]
        return {
            "circuit": simulated["bitstrings"],
            "uniform": _lines(sample_store.generate_uniform(n, self.samples, seed=2)),
            "spoof": _lines(
                sample_store.generate_spoof(n, self.samples, seed=3, fixed_prefix_len=3, fixed_value=0)
            ),
        }

    async def run_scenario(
        self, client: httpx.AsyncClient, name: str, lines: List[str], baseline: List[str]
    ) -> Dict[str, Any]:
        sample = {"bitstrings": lines, "label": name}
        result: Dict[str, Any] = {"scenario": name, "success": True}
        try:
            result["xeb"] = await self.post(client, "xeb", {"sample": sample, "circuit": CIRCUIT})
            result["heatmap"] = await self.post(
                client, "heatmap", {"sample": sample, "include_sliced": False}
            )
            result["nist"] = await self.post(client, "nist", {"sample": sample})
            result["spectrum"] = await self.post(client, "spectrum", {"sample": sample})
            result["wdist"] = await self.post(
                client, "wdist", {"a": sample, "b": {"bitstrings": baseline, "label": "baseline"}}
            )
        except (RuntimeError, httpx.HTTPError) as e:
            logger.error("Scenario failed", scenario=name, error=str(e))
            result["success"] = False
            result["error"] = str(e)
        return result

    async def run(self, quick: bool = False) -> None:
        baseline = _lines(sample_store.generate_uniform(CIRCUIT["n_qubits"], self.samples, seed=99))
        async with httpx.AsyncClient() as client:
            scenarios = await self.scenario_lines(client)
            if quick:
                scenarios = {"circuit": scenarios["circuit"]}
            for name, lines in scenarios.items():
                logger.info("Running scenario", scenario=name, records=len(lines))
                self.results.append(await self.run_scenario(client, name, lines, baseline))
        self.save_results()

    def save_results(self) -> None:
        timestamp = datetime.now(timezone.utc).strftime("%Y%m%d_%H%M%S")
        json_file = self.output_dir / f"workflow_results_{timestamp}.json"
        json_file.write_bytes(orjson.dumps(self.results, option=orjson.OPT_INDENT_2))
        md_file = self.output_dir / f"workflow_report_{timestamp}.md"
        md_file.write_text(self.report(), encoding="utf-8")
        logger.info("Results saved", json=str(json_file), report=str(md_file))

    def report(self) -> str:
        passed = [r for r in self.results if r["success"]]
        lines = [
            "# Verification Workflow Report",
            "",
            f"- **Service**: {self.base_url}",
            f"- **Circuit**: n={CIRCUIT['n_qubits']} m={CIRCUIT['m_cycles']} seed={CIRCUIT['seed']}",
            f"- **Records per scenario**: {self.samples}",
            f"- **Scenarios completed**: {len(passed)}/{len(self.results)}",
            "",
            "| scenario | F_XEB | max bias | NIST passed | mp_distance | W1 to uniform |",
            "|---|---|---|---|---|---|",
        ]
        for r in passed:
            nist_passed = sum(1 for o in r["nist"] if o["passed"])
            lines.append(
                f"| {r['scenario']} | {r['xeb']['fidelity']:.4f} "
                f"| {r['heatmap']['summary']['max_column_bias']:.4f} "
                f"| {nist_passed}/{len(r['nist'])} "
                f"| {r['spectrum']['summary']['mp_distance']:.4f} "
                f"| {r['wdist']['distance']:.4f} |"
            )
        for r in self.results:
            if not r["success"]:
                lines.append(f"\n**{r['scenario']} failed**: {r['error']}")
        return "\n".join(lines) + "\n"


def main() -> None:
    parser = argparse.ArgumentParser(description="Run the verification workflow against the service")
    parser.add_argument("--quick", action="store_true", help="Run the circuit scenario only")
    parser.add_argument("--base-url", default="http://localhost:8010", help="Service base URL")
    parser.add_argument("--samples", type=int, default=5000, help="Records per scenario")
    parser.add_argument("--output-dir", default="workflow_results", help="Where results are saved")
    args = parser.parse_args()

    try:
        tester = ServiceWorkflowTester(args.base_url, args.output_dir, args.samples)
        asyncio.run(tester.run(quick=args.quick))
    except Exception as e:
        print(f"Workflow failed: {e}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
