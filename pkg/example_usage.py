"""
Example usage of the Bee-Identification API

This script demonstrates how to:
1. Read the channel constants
2. Fetch a bound table
3. Run a reproducible simulation
4. Compare decoders on the same seed
"""

import json
from typing import Any, Dict, List, Optional

import httpx


class BeeIdClient:
    """Client for interacting with the Bee-Identification API"""

    def __init__(self, base_url: str = "http://localhost:8000", timeout: float = 300.0):
        self.base_url = base_url
        self.api_url = f"{base_url}/api/v1"
        self.client = httpx.Client(timeout=timeout)

    def health_check(self) -> Dict[str, Any]:
        """Check if the API is healthy"""
        response = self.client.get(f"{self.api_url}/health")
        return response.json()

    def profile(self, p: float) -> Dict[str, Any]:
        """Channel constants for BSC(p)"""
        response = self.client.get(f"{self.api_url}/profile", params={"p": p})
        response.raise_for_status()
        return response.json()

    def bounds(self, p: float, r_min: float = 0.0, r_max: float = 0.6, steps: int = 200) -> Dict[str, Any]:
        """
        Bound table for one channel

        Args:
            p: Crossover probability
            r_min: First rate
            r_max: Last rate
            steps: Grid points

        Returns:
            Profile and curve
        """
        payload = {"p": p, "r_min": r_min, "r_max": r_max, "steps": steps}
        response = self.client.post(f"{self.api_url}/bounds", json=payload)
        response.raise_for_status()
        return response.json()

    def simulate(
        self,
        n_list: List[int],
        rate: float,
        p: float,
        decoder: str = "joint",
        trials: int = 2000,
        seed: Optional[int] = None,
        **extra: Any
    ) -> Dict[str, Any]:
        """
        Run a Monte Carlo sweep

        Args:
            n_list: Blocklengths
            rate: Design rate in bits
            p: Crossover probability
            decoder: independent, joint, gmd or bruteforce
            trials: Trials per blocklength
            seed: Base seed (server draws one when omitted)

        Returns:
            Simulation response with the seed used
        """
        payload = {"n_list": n_list, "rate": rate, "p": p, "decoder": decoder, "trials": trials, "seed": seed}
        payload.update(extra)
        response = self.client.post(f"{self.api_url}/simulate", json=payload)
        response.raise_for_status()
        return response.json()


def print_cells(result: Dict[str, Any]):
    """Pretty print simulation cells"""
    print(f"  seed: {result['seed']}")
    for cell in result["cells"]:
        print(
            f"  n={cell['n']:3d} m={cell['m']:4d} errors={cell['errors']:6d}/{cell['trials']} "
            f"p_hat={cell['p_hat']:.4g} CI=[{cell['ci_low']:.4g}, {cell['ci_high']:.4g}]"
        )
    if result.get("fit"):
        print(f"  fitted exponent: {result['fit']['slope']:.4f}")


def main():
    """Run example workflow"""
    client = BeeIdClient()

    print("=" * 80)
    print("Bee-Identification API - Example Usage")
    print("=" * 80)

    print("\n1. Health Check")
    print(json.dumps(client.health_check(), indent=2))

    print("\n2. Channel constants at p = 0.01")
    profile = client.profile(0.01)
    for key in ("alpha_p", "r0", "r1", "r_cr", "r_trc", "lambda_p"):
        print(f"  {key:10s} {profile[key]:.4f}")

    print("\n3. Bound table (every 50th point)")
    curve = client.bounds(0.01)["curve"]["points"]
    for point in curve[::50]:
        trc = point["lb_trc_jd"]
        print(
            f"  R={point['rate']:.3f} rce_id={point['lb_rce_id']:.3f} rce_jd={point['lb_rce_jd']:.3f} "
            f"trc_jd={'-' if trc is None else f'{trc:.3f}'} ub={point['ub']:.3f}"
        )

    print("\n4. Joint decoding, n = 8..20")
    result = client.simulate([8, 12, 16, 20], rate=0.1, p=0.05, trials=20000, seed=7)
    print_cells(result)

    print("\n5. Decoders on the same seed (n = 12, R = 0.25, p = 0.03)")
    for decoder in ("independent", "gmd", "joint"):
        print(f" {decoder}:")
        print_cells(client.simulate([12], rate=0.25, p=0.03, decoder=decoder, trials=20000, seed=11))

    print("\n" + "=" * 80)
    print("Example workflow completed!")
    print("=" * 80)


if __name__ == "__main__":
    try:
        main()
    except httpx.ConnectError:
        print("Error: Could not connect to the API server.")
        print("Please ensure the server is running: python -m app.cli serve")
    except Exception as e:
        print(f"Error: {e}")
