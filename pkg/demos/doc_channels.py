"""DOC channels: PPT tests, the EB certificate and compositions."""

import json
import os

from chanlab.families import (
    DOCChannel,
    compose_doc,
    composition_split,
    eb_certificate,
    ppt2_conditions,
    ppt_test,
    realignment_test,
    triple_from_json,
)
from chanlab.sampling import RngStream, sample_haar_isometry
from chanlab.twirl import abc_of_isometry

here = os.path.dirname(os.path.abspath(__file__))


def load(name):
    with open(os.path.join(here, os.pardir, "fixtures", name)) as fh:
        return triple_from_json(json.load(fh))


# A random DOC channel at moderate s is usually not PPT.
d = 6
t = abc_of_isometry(sample_haar_isometry(d, 3, RngStream(5)))
print("random DOC (d=6, s=3):", ppt_test(t), eb_certificate(t).verdict)

# The certificate has three outcomes.
doc, cduc, entangled = load("ppt_doc_d3.json"), load("ppt_cduc_d3.json"), load("ppt_entangled_d3.json")
for name, ch in [("PPT DOC", doc), ("PPT CDUC", cduc), ("PPT entangled", entangled)]:
    cert = eb_certificate(ch)
    print(f"{name:>14}: PPT {ppt_test(ch).ppt}, realignment {realignment_test(ch)[0]}, verdict {cert.verdict}")

# Composing the two PPT channels gives a certified EB channel in either order.
for first, second in [(doc, cduc), (cduc, doc)]:
    t1, t2 = first.triple, second.triple
    ok, block_margin, pair_margin = ppt2_conditions(t1, t2)
    cert = eb_certificate(compose_doc(t1, t2), split=composition_split(t1, t2))
    print(f"{first.kind} o {second.kind}: conditions {ok} (margins {block_margin:.3g}, {pair_margin:.3g}),"
          f" verdict {cert.verdict}")

# Two random channels with large environment compose into an EB channel.
d, s = 10, 100
t1 = abc_of_isometry(sample_haar_isometry(d, s, RngStream(1)))
t2 = abc_of_isometry(sample_haar_isometry(d, s, RngStream(2)))
print("random pair, d=10, s=100:", ppt2_conditions(t1, t2)[0],
      eb_certificate(compose_doc(t1, t2), split=composition_split(t1, t2)).verdict)
print("a single factor on its own:", eb_certificate(DOCChannel(t1)).verdict)
