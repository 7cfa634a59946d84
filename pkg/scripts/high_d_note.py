"""Print the EOPM high focal-GDD figures next to the published ones.

The closed-form visibility follows from 4 D^2 / dT^2; the quoted ratio is a
quarter of it, so the two visibilities differ.  Nothing here is asserted.
"""
from timelens_hom import cli
from timelens_hom import source as src
from timelens_hom.config import RunConfig


def main():
    model = RunConfig().source_model()
    print(f"sigma_cw = {src.sigma_cw(model):.5f} rad/ps")
    for name, value, status in cli.high_d_rows(model):
        print(f"{name:24s} {value:12.6g}  {status}")


if __name__ == "__main__":
    main()
