# %% [markdown]
# # Cell geometry of the planar Sierpinski carpet
#
# Cells are addressed by words over {1,...,8}; digit d contracts toward the
# anchor point q_d.  This walk shows the word/box correspondence, adjacency,
# the dihedral symmetries, faces and the self-similar measure.

# %%
from carpet_energy import carpet

w = carpet.Word.from_string("35")
print("word", w, "-> box", carpet.word_to_box(w))
print("word 1 ->", carpet.word_to_box(carpet.Word.from_string("1")))
print("word 5 ->", carpet.word_to_box(carpet.Word.from_string("5")),
      "(cell 5 sits opposite cell 1)")

# %% [markdown]
# Two same-level cells either share a side ("edge"), meet at a point
# ("corner"), or are apart.  Adjacency is decided on integer grid
# coordinates, never floats.

# %%
W = carpet.Word.from_string
for pair in (("1", "2"), ("2", "4"), ("1", "3")):
    print(pair, "->", carpet.cells_adjacent(W(pair[0]), W(pair[1])))

# %% [markdown]
# The 8 square symmetries act on words digit-wise through fixed permutation
# tables, validated against box geometry at import.  Rotation by pi maps
# cell 1 to cell 5.

# %%
rot_pi = carpet.SymmetryElement("rotation", 2)
print("rotation by pi:", W("1"), "->", carpet.apply_symmetry(rot_pi, W("1")))
for a in carpet.D4:
    inv = carpet.inverse(a)
    assert carpet.compose(a, inv) == carpet.IDENTITY
print("D4 closure and inverses check out for all", len(carpet.D4), "elements")

# %% [markdown]
# Faces collect the cells touching one side of the square; the left face at
# level n has exactly 3^n cells (digits from {1,7,8} only).

# %%
for n in (1, 2, 3):
    print("level", n, "left face size:", len(carpet.face_codes(n, "L")))
print("level-1 faces:", {f: sorted(str(w) for w in carpet.face_words(1, f))
                         for f in "LRTB"})

# %%
print("measure of any level-2 cell:", carpet.cell_measure(W("35")))
total = sum(carpet.cell_measure(W("2").child(d)) for d in range(1, 9))
print("children masses add up to the parent:", total == carpet.cell_measure(W("2")))
