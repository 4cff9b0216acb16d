/* placeholder for the pinned d3 v5 build used by the grading image */
