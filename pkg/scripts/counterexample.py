"""Three-node example where joint source-channel coding succeeds but separation fails."""

from relaycode import info_region as ir


def main() -> None:
    q = ir.counterexample_query()
    print("conditional entropies:")
    for name, value in ir.entropy_table(q.source):
        print(f"  {name:<14s} {value:.4f}")
    print("downlink mutual informations:", ", ".join(f"{m:.4f}" for m in q.downlink_mutuals))
    print()
    print(ir.check_jscc_achievable(q).format())
    print()
    print(ir.check_separation_feasible(q).format())


if __name__ == "__main__":
    main()
