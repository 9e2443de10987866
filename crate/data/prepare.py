"""Turn SMILES datasets into explicit-hydrogen molecule JSON lines with
Gasteiger partial charges, using RDKit.

    python data/prepare.py csv IN.csv OUT.jsonl [--id COL] [--smiles COL] [--target COL]
    python data/prepare.py fixture OUT.jsonl
    python data/prepare.py graphs OUT.jsonl
    python data/prepare.py freesolv DATAMOL_WHEEL OUT_DIR
    python data/prepare.py esol GAUCHE_SDIST OUT_DIR

Chirality tags are rewritten relative to ascending neighbour ids, the
convention used by the molecule JSON format.
"""

import argparse
import csv
import json
import math
import os
import sys

from rdkit import Chem, RDLogger
from rdkit.Chem import AllChem

RDLogger.DisableLog("rdApp.*")

ALLOWED = {"H", "B", "C", "N", "O", "F", "P", "S", "Cl", "Br", "I"}
NCI = os.path.join(os.path.dirname(Chem.__file__), "..", "Data", "NCI", "first_5K.smi")

BOND = {
    Chem.BondType.SINGLE: "SINGLE",
    Chem.BondType.DOUBLE: "DOUBLE",
    Chem.BondType.TRIPLE: "TRIPLE",
    Chem.BondType.AROMATIC: "AROMATIC",
}


def odd(seq):
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return inversions % 2 == 1


def tag(atom):
    t = atom.GetChiralTag()
    if t not in (Chem.ChiralType.CHI_TETRAHEDRAL_CW, Chem.ChiralType.CHI_TETRAHEDRAL_CCW):
        return None
    if atom.GetDegree() != 4:
        return None
    nbrs = [b.GetOtherAtomIdx(atom.GetIdx()) for b in atom.GetBonds()]
    cw = t == Chem.ChiralType.CHI_TETRAHEDRAL_CW
    if odd(nbrs):
        cw = not cw
    return "CW" if cw else "CCW"


def supported(mol):
    return all(a.GetSymbol() in ALLOWED and a.GetIsotope() == 0 for a in mol.GetAtoms())


def graph(name, smiles):
    mol = Chem.MolFromSmiles(smiles)
    if mol is None or not supported(mol):
        return None
    mol = Chem.AddHs(mol)
    AllChem.ComputeGasteigerCharges(mol)
    atoms = []
    for a in mol.GetAtoms():
        q = a.GetDoubleProp("_GasteigerCharge")
        if not math.isfinite(q):
            return None
        rec = {"element": a.GetSymbol(), "partial_charge": round(q, 6)}
        if a.GetFormalCharge():
            rec["formal_charge"] = a.GetFormalCharge()
        t = tag(a)
        if t:
            rec["chirality"] = t
        atoms.append(rec)
    bonds = []
    for b in mol.GetBonds():
        if b.GetBondType() not in BOND:
            return None
        i, j = sorted((b.GetBeginAtomIdx(), b.GetEndAtomIdx()))
        bonds.append({"a": i, "b": j, "order": BOND[b.GetBondType()]})
    return {"name": name, "atoms": atoms, "bonds": bonds}


def convert_csv(args):
    n_in = n_out = 0
    with open(args.input, newline="") as f, open(args.output, "w") as out:
        for i, row in enumerate(csv.DictReader(f)):
            n_in += 1
            rid = row[args.id] if args.id else str(i)
            g = graph(rid, row[args.smiles])
            if g is None:
                print(f"skipped {rid}: {row[args.smiles]}", file=sys.stderr)
                continue
            out.write(json.dumps({"id": rid, "target": float(row[args.target]), "graph": g}) + "\n")
            n_out += 1
    print(f"{n_out} of {n_in} records written", file=sys.stderr)


def nci_molecules(limit):
    with open(NCI) as f:
        for line in f:
            smiles, nci_id = line.split()
            mol = Chem.MolFromSmiles(smiles)
            if mol is None or not supported(mol) or any(a.GetSymbol() == "B" for a in mol.GetAtoms()):
                continue
            yield f"NCI{nci_id}", smiles, mol
            limit -= 1
            if limit == 0:
                return


STEREO = [
    "N[C@@H](C)C(=O)O",
    "N[C@H](C)C(=O)O",
    "[C@@H](N)(C)C(=O)O",
    "C[C@H](N)C(=O)O",
    "OC(=O)[C@@H](N)C",
    "[C@H]1(O)CCCCC1C",
    "C[C@@H]1CCCC[C@H]1O",
    "C1CC[C@@H]2CCCC[C@H]2C1",
    "O[C@H]1[C@H](O)[C@@H](O)[C@H](O)[C@@H](CO)O1",
    "F[C@](Cl)(Br)I",
    "F[C@@](Cl)(Br)I",
    "Cl[C@](F)(I)Br",
    "C[C@@]1(O)CCCN1",
    "CC(C)[C@@H]1CC[C@@H](C)C[C@H]1O",
    "N[C@@H](Cc1ccccc1)C(=O)O",
    "C[C@H](O)CC",
    "CC[C@@H](C)O",
    "O[C@@H](C)CC",
    "C[C@@H]1CC1(C)C",
    "[C@@H]12CCCC[C@@H]1CCCC2",
]


def stereo_molecules():
    for i, smiles in enumerate(STEREO):
        yield f"S{i}", smiles, Chem.MolFromSmiles(smiles)


def fixture(args):
    import itertools

    with open(args.output, "w") as out:
        for rid, smiles, mol in itertools.chain(stereo_molecules(), nci_molecules(400)):
            heavy = list(mol.GetAtoms())
            rec = {
                "id": rid,
                "smiles": smiles,
                "elements": [a.GetSymbol() for a in heavy],
                "bonds": sorted(sorted((b.GetBeginAtomIdx(), b.GetEndAtomIdx())) for b in mol.GetBonds()),
                "hydrogens": [a.GetTotalNumHs() for a in heavy],
                "formal_charges": [a.GetFormalCharge() for a in heavy],
            }
            h = Chem.AddHs(mol)
            rec["chirality"] = {str(a.GetIdx()): tag(a) for a in h.GetAtoms() if tag(a)}
            out.write(json.dumps(rec, separators=(",", ":")) + "\n")


CHIRAL = [
    ("alanine", "C[C@H](N)C(=O)O"),
    ("lactic_acid", "C[C@@H](O)C(=O)O"),
    ("2_butanol", "CC[C@@H](C)O"),
    ("bromochlorofluoromethane", "F[C@H](Cl)Br"),
    ("glyceraldehyde", "OC[C@@H](O)C=O"),
    ("serine", "N[C@@H](CO)C(=O)O"),
    ("1_phenylethanol", "C[C@@H](O)c1ccccc1"),
    ("2_chlorobutane", "CC[C@H](C)Cl"),
    ("3_methylhexane", "CCC[C@@H](C)CC"),
    ("limonene", "CC1=CC[C@@H](CC1)C(C)=C"),
]


def graphs(args):
    with open(args.output, "w") as out:
        for name, smiles in [("cytosine", "Nc1cc[nH]c(=O)n1")] + CHIRAL:
            g = graph(name, smiles)
            out.write(json.dumps({"id": name, "smiles": smiles, "graph": g}) + "\n")


def freesolv(args):
    import io
    import zipfile

    text = zipfile.ZipFile(args.wheel).read("datamol/data/freesolv.csv").decode()
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "freesolv.csv")
    with open(path, "w", newline="") as out:
        w = csv.writer(out)
        w.writerow(["id", "smiles", "target"])
        for i, row in enumerate(csv.DictReader(io.StringIO(text))):
            w.writerow([f"FS{i:03d}", row["smiles"], row["expt"]])
    convert_csv(argparse.Namespace(input=path, output=os.path.join(args.out_dir, "freesolv.jsonl"), id="id", smiles="smiles", target="target"))


def esol(args):
    import io
    import tarfile

    with tarfile.open(args.sdist) as t:
        name = next(n for n in t.getnames() if n.endswith("property_prediction/ESOL.csv"))
        text = t.extractfile(name).read().decode()
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "esol.csv")
    with open(path, "w", newline="") as out:
        w = csv.writer(out)
        w.writerow(["id", "smiles", "target"])
        for i, row in enumerate(csv.DictReader(io.StringIO(text))):
            w.writerow([f"ESOL{i:04d}", row["smiles"], row["measured log solubility in mols per litre"]])
    convert_csv(argparse.Namespace(input=path, output=os.path.join(args.out_dir, "esol.jsonl"), id="id", smiles="smiles", target="target"))


def main():
    p = argparse.ArgumentParser()
    sub = p.add_subparsers(dest="cmd", required=True)
    c = sub.add_parser("csv")
    c.add_argument("input")
    c.add_argument("output")
    c.add_argument("--id", default=None)
    c.add_argument("--smiles", default="smiles")
    c.add_argument("--target", default="target")
    c.set_defaults(func=convert_csv)
    fx = sub.add_parser("fixture")
    fx.add_argument("output")
    gr = sub.add_parser("graphs")
    gr.add_argument("output")
    gr.set_defaults(func=graphs)
    fs = sub.add_parser("freesolv")
    fs.add_argument("wheel")
    fs.add_argument("out_dir")
    fs.set_defaults(func=freesolv)
    es = sub.add_parser("esol")
    es.add_argument("sdist")
    es.add_argument("out_dir")
    es.set_defaults(func=esol)
    fx.set_defaults(func=fixture)
    args = p.parse_args()
    args.func(args)


if __name__ == "__main__":
    main()
