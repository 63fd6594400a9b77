"""Make-safe monitor speaking the reliquant subprocess line protocol."""
import sys

for line in sys.stdin:
    try:
        a, b, c, f0, f1, f2 = (int(v) for v in line.split("\t")[:6])
    except ValueError:
        print("! malformed request", flush=True)
        continue
    trip = a >= 24 or (f0 and b >= 20) or (f1 and f2 and c >= 6)
    print("1" if trip else "0", flush=True)
