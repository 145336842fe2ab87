"""List the reduced chains for external fields A A c cb."""
from fe_workbench.chains import enumerate_chains

chains = enumerate_chains("AAcC")
print(f"{len(chains)} reduced chains")
for ch in chains:
    print(f"  {ch.notation()}")

# identifying reversed chains only, the count is larger
print(len(enumerate_chains("AAcC", dedup="reversal")), "chains up to reversal")
