# Wiretap Capacity Tests
