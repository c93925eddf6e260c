"""Toolchain for privacy-annotated smart contracts.

The package has two halves.  The compiler half turns an annotated contract
into a privacy policy, a stripped public twin of the contract, and a
verifier descriptor.  The runtime half simulates a blockchain, a trusted
execution enclave, and the multi-party transaction protocol that connects
them, so that the full lifecycle (negotiate, settle, execute, challenge,
complete or punish) can be exercised deterministically in tests.
"""

__version__ = "0.1.0"
