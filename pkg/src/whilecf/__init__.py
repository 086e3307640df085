"""While-CF: semantics, Hoare-logic proof trees and simulation checking."""
from .assertions import entails, parse_assertion, pretty_assertion
from .bigstep import eval_big, refines_big, valid_big
from .lang import Footprint, State, enumerate_states, parse_command, pretty
from .proof import Certificate, Triple, check, conclusion, parse_certificate, print_certificate
from .smallstep import eval_small, run_small, valid_cont, valid_wp
from .verify import verify, verify_file

__version__ = "0.1.0"

__all__ = [
    "Footprint", "State", "enumerate_states", "parse_command", "pretty",
    "parse_assertion", "pretty_assertion", "entails",
    "eval_big", "valid_big", "refines_big", "eval_small", "run_small", "valid_wp", "valid_cont",
    "Triple", "Certificate", "check", "conclusion", "parse_certificate", "print_certificate",
    "verify", "verify_file",
]
